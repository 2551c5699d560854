//! Structural checks on a single functional unit.

use crate::model::FunctionalUnit;
use crate::report::{Finding, ValidationReport};

/// Report missing inputs or outputs, a missing motion, and objects that carry
/// neither a state nor a location. An empty report means the unit is
/// syntactically valid.
pub fn check_syntax(unit: &FunctionalUnit) -> ValidationReport {
    let mut report = ValidationReport::default();
    if unit.inputs().is_empty() {
        report.push(Finding::MissingInput);
    }
    if unit.outputs().is_empty() {
        report.push(Finding::MissingOutput);
    }
    // A MotionNode cannot be empty once constructed, so a unit always carries
    // exactly one motion. The check is kept so the report stays total.
    let motions = usize::from(!unit.motion().label().is_empty());
    if motions != 1 {
        report.push(Finding::MotionCount { count: motions });
    }
    for object in unit.inputs().iter().chain(unit.outputs()) {
        if !object.has_assigned_state() {
            report.push(Finding::ObjectWithoutState {
                object: object.label().to_string(),
            });
        }
    }
    report
}
