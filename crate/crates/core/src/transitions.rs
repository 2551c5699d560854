//! Legal object state changes and the object-action correctness check.
//!
//! File format: UTF-8, one entry per line, `from,to` or `from,to,motion`.
//! Lines starting with `#` are comments; blank lines are skipped.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::model::{normalize_label, FunctionalUnit, ObjectNode};
use crate::report::{Finding, ValidationReport};
use crate::syntax::check_syntax;

#[derive(Debug, Error)]
pub enum TransitionError {
    #[error("cannot read transition table: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TransitionTable {
    pairs: BTreeSet<(String, String)>,
    qualified: BTreeSet<(String, String, String)>,
}

impl TransitionTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TransitionError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Self, TransitionError> {
        let mut table = TransitionTable::new();
        for (index, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<String> = trimmed.split(',').map(normalize_label).collect();
            let format_error = |message: &str| TransitionError::Format {
                line: index + 1,
                message: message.to_string(),
            };
            if fields.iter().any(String::is_empty) {
                return Err(format_error("empty field"));
            }
            match fields.as_slice() {
                [from, to] => table.insert(from, to, None),
                [from, to, motion] => table.insert(from, to, Some(motion)),
                _ => return Err(format_error("expected `from,to` or `from,to,motion`")),
            }
        }
        Ok(table)
    }

    pub fn insert(&mut self, from: &str, to: &str, motion: Option<&str>) {
        let (from, to) = (normalize_label(from), normalize_label(to));
        match motion {
            Some(m) => {
                self.qualified.insert((from, to, normalize_label(m)));
            }
            None => {
                self.pairs.insert((from, to));
            }
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len() + self.qualified.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Reflexive changes are always allowed; unqualified entries apply to
    /// every motion.
    pub fn allows(&self, from: &str, to: &str, motion: &str) -> bool {
        if from == to {
            return true;
        }
        let pair = (from.to_string(), to.to_string());
        self.pairs.contains(&pair)
            || self
                .qualified
                .contains(&(pair.0, pair.1, motion.to_string()))
    }

    /// Render in file format, sorted, with an optional header comment.
    pub fn to_file_string(&self, header: Option<&str>) -> String {
        let mut out = String::new();
        if let Some(header) = header {
            for line in header.lines() {
                let _ = writeln!(out, "# {line}");
            }
        }
        for (from, to) in &self.pairs {
            let _ = writeln!(out, "{from},{to}");
        }
        for (from, to, motion) in &self.qualified {
            let _ = writeln!(out, "{from},{to},{motion}");
        }
        out
    }

    /// Harvest every non-reflexive (input state, output state) pair observed
    /// on objects that appear on both sides of the given units.
    pub fn extract<'a>(units: impl IntoIterator<Item = &'a FunctionalUnit>) -> Self {
        let mut table = TransitionTable::new();
        for unit in units {
            let before = states_by_label(unit.inputs());
            for (label, after) in states_by_label(unit.outputs()) {
                let Some(prior) = before.get(label) else { continue };
                for to in after.difference(prior) {
                    for from in prior {
                        table.insert(from, to, None);
                    }
                }
            }
        }
        table
    }
}

fn states_by_label(objects: &[ObjectNode]) -> BTreeMap<&str, BTreeSet<String>> {
    let mut map: BTreeMap<&str, BTreeSet<String>> = BTreeMap::new();
    for object in objects {
        map.entry(object.label())
            .or_default()
            .extend(object.states().iter().cloned());
    }
    map
}

/// Judge the state changes of objects present on both sides of the unit
/// (matched by label). An output state is legal when some input state of the
/// same object reaches it; for an unreachable output state every pair from
/// the input states is reported.
pub fn check_transitions(unit: &FunctionalUnit, table: &TransitionTable) -> ValidationReport {
    let mut report = ValidationReport::default();
    let motion = unit.motion().label();
    let before = states_by_label(unit.inputs());
    for (label, after) in states_by_label(unit.outputs()) {
        let Some(prior) = before.get(label) else { continue };
        if prior.is_empty() {
            continue;
        }
        for to in &after {
            if prior.iter().any(|from| table.allows(from, to, motion)) {
                continue;
            }
            for from in prior {
                report.push(Finding::IllegalTransition {
                    object: label.to_string(),
                    from: from.clone(),
                    to: to.clone(),
                });
            }
        }
    }
    report
}

/// Full validation: syntax report followed by transition report.
pub fn validate_unit(unit: &FunctionalUnit, table: &TransitionTable) -> ValidationReport {
    let mut report = check_syntax(unit);
    report.extend(check_transitions(unit, table));
    report
}

pub fn is_valid_unit(unit: &FunctionalUnit, table: &TransitionTable) -> bool {
    validate_unit(unit, table).is_empty()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{MotionNode, ObjectNode};

    fn obj(label: &str, states: &[&str]) -> ObjectNode {
        ObjectNode::new(label, states).unwrap()
    }

    fn unit(motion: &str, inputs: Vec<ObjectNode>, outputs: Vec<ObjectNode>) -> FunctionalUnit {
        FunctionalUnit::new(inputs, MotionNode::new(motion).unwrap(), outputs)
    }

    fn foonish() -> TransitionTable {
        TransitionTable::parse("# seed\nwhole,chopped\nwhole,sliced\n\nempty,contains milk\n").unwrap()
    }

    #[test]
    fn parse_counts_distinct_entries() {
        let table = TransitionTable::parse("whole,chopped\nWhole , chopped\nwhole,chopped,chop\n").unwrap();
        assert_eq!(table.len(), 2);
        assert!(table.allows("whole", "chopped", "slice"));
    }

    #[test]
    fn empty_file_gives_empty_table() {
        let table = TransitionTable::parse("").unwrap();
        assert!(table.is_empty());
        assert!(!table.allows("whole", "chopped", "chop"));
        assert!(table.allows("whole", "whole", "chop"));
    }

    #[test]
    fn bad_lines_report_line_numbers() {
        match TransitionTable::parse("whole,chopped\nonly-one-field\n") {
            Err(TransitionError::Format { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            TransitionTable::parse("a,,b"),
            Err(TransitionError::Format { line: 1, .. })
        ));
    }

    #[test]
    fn motion_qualified_entries_apply_to_that_motion_only() {
        let table = TransitionTable::parse("raw,cooked,boil").unwrap();
        assert!(table.allows("raw", "cooked", "boil"));
        assert!(!table.allows("raw", "cooked", "fry"));
    }

    #[test]
    fn reversed_chop_is_illegal() {
        let u = unit("chop", vec![obj("onion", &["chopped"])], vec![obj("onion", &["whole"])]);
        assert_eq!(
            check_transitions(&u, &foonish()).findings,
            vec![Finding::IllegalTransition {
                object: "onion".into(),
                from: "chopped".into(),
                to: "whole".into()
            }]
        );
        assert!(!is_valid_unit(&u, &foonish()));
    }

    #[test]
    fn reflexive_and_listed_changes_are_legal() {
        let same = unit("hold", vec![obj("onion", &["whole"])], vec![obj("onion", &["whole"])]);
        assert!(check_transitions(&same, &TransitionTable::new()).is_empty());
        let sliced = unit("slice", vec![obj("onion", &["whole"])], vec![obj("onion", &["sliced"])]);
        assert!(check_transitions(&sliced, &foonish()).is_empty());
        assert!(is_valid_unit(&sliced, &foonish()));
    }

    #[test]
    fn one_sided_objects_produce_no_findings() {
        let u = unit(
            "mix",
            vec![obj("flour", &["sifted"])],
            vec![obj("dough", &["kneaded"])],
        );
        assert!(check_transitions(&u, &TransitionTable::new()).is_empty());
    }

    #[test]
    fn multi_state_objects_need_some_source_per_target() {
        let table = TransitionTable::parse("whole,sliced").unwrap();
        let ok = unit(
            "slice",
            vec![obj("apple", &["whole", "washed"])],
            vec![obj("apple", &["sliced", "washed"])],
        );
        assert!(check_transitions(&ok, &table).is_empty());
        let bad = unit(
            "slice",
            vec![obj("apple", &["whole", "washed"])],
            vec![obj("apple", &["peeled"])],
        );
        assert_eq!(check_transitions(&bad, &table).findings.len(), 2);
    }

    #[test]
    fn stateless_unit_is_invalid() {
        let u = unit("slice", vec![obj("onion", &["whole"])], vec![obj("onion", &[])]);
        assert!(!is_valid_unit(&u, &foonish()));
    }

    #[test]
    fn extraction_collects_cross_pairs() {
        let u = unit(
            "slice",
            vec![obj("apple", &["whole", "washed"])],
            vec![obj("apple", &["sliced", "washed"])],
        );
        let table = TransitionTable::extract([&u]);
        assert_eq!(table.len(), 2);
        assert!(table.allows("washed", "sliced", "any"));
        let text = table.to_file_string(Some("harvested"));
        assert_eq!(TransitionTable::parse(&text).unwrap(), table);
    }
}
