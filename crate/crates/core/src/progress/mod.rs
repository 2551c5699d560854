//! Per-object progress lines: a projection of a task tree onto each object
//! label, listing every unit that touches it. The projection is lossless, so
//! a tree can be rebuilt from its lines.

mod correction;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{FunctionalUnit, ModelError, MotionNode, ObjectNode, TaskTree};

pub use correction::{apply_correction, Correction, CorrectionError, Side};

/// One occurrence of the object in a unit's input or output list. `slot` is
/// the position in that list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub slot: usize,
    pub states: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub container: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ingredients: Option<BTreeSet<String>>,
}

impl Snapshot {
    fn of(slot: usize, node: &ObjectNode) -> Self {
        Snapshot {
            slot,
            states: node.states().clone(),
            container: node.container().map(str::to_string),
            ingredients: node.ingredients().cloned(),
        }
    }

    fn to_node(&self, label: &str) -> Result<ObjectNode, ModelError> {
        let node = ObjectNode::new(label, &self.states)?.with_container(self.container.as_deref())?;
        match &self.ingredients {
            Some(set) => node.with_ingredients(set),
            None => Ok(node),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProgressEntry {
    pub unit_index: usize,
    pub motion: String,
    pub description: String,
    /// State after the unit, or before it when the object is only consumed.
    pub states: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub container: Option<String>,
    pub inputs: Vec<Snapshot>,
    pub outputs: Vec<Snapshot>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProgressLine {
    pub object: String,
    pub entries: Vec<ProgressEntry>,
}

/// Lines plus the tree goal, which is all that is needed to rebuild the tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProgressLines {
    pub goal: ObjectNode,
    pub lines: Vec<ProgressLine>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReconstructError {
    #[error("unit {0} has no entries")]
    MissingUnit(usize),
    #[error("unit {unit_index} has conflicting motions")]
    MotionConflict { unit_index: usize },
    #[error("unit {unit_index} has a gap or duplicate at {side} slot {slot}")]
    BadSlot {
        unit_index: usize,
        side: &'static str,
        slot: usize,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Fixed description template: `({motion}) {states} in {container}`.
pub fn describe(motion: &str, states: &BTreeSet<String>, container: Option<&str>) -> String {
    let mut text = format!("({motion})");
    if !states.is_empty() {
        text.push(' ');
        text.push_str(&states.iter().cloned().collect::<Vec<_>>().join(", "));
    }
    if let Some(place) = container {
        text.push_str(" in ");
        text.push_str(place);
    }
    text
}

/// One line per distinct object label, in order of first appearance, with
/// one entry per unit that touches the label.
pub fn to_progress_lines(tree: &TaskTree) -> ProgressLines {
    let mut order: Vec<String> = Vec::new();
    let mut lines: BTreeMap<String, Vec<ProgressEntry>> = BTreeMap::new();
    for (unit_index, unit) in tree.units.iter().enumerate() {
        let mut touched: BTreeMap<&str, (Vec<Snapshot>, Vec<Snapshot>)> = BTreeMap::new();
        let mut touched_order: Vec<&str> = Vec::new();
        for (slot, node) in unit.inputs().iter().enumerate() {
            let slot_entry = touched.entry(node.label()).or_insert_with(|| {
                touched_order.push(node.label());
                Default::default()
            });
            slot_entry.0.push(Snapshot::of(slot, node));
        }
        for (slot, node) in unit.outputs().iter().enumerate() {
            let slot_entry = touched.entry(node.label()).or_insert_with(|| {
                touched_order.push(node.label());
                Default::default()
            });
            slot_entry.1.push(Snapshot::of(slot, node));
        }
        for label in touched_order {
            let (inputs, outputs) = touched.remove(label).expect("label was recorded");
            let shown = outputs.last().or(inputs.last()).expect("entry has an occurrence");
            let motion = unit.motion().label().to_string();
            let entry = ProgressEntry {
                unit_index,
                description: describe(&motion, &shown.states, shown.container.as_deref()),
                states: shown.states.clone(),
                container: shown.container.clone(),
                motion,
                inputs,
                outputs,
            };
            if !lines.contains_key(label) {
                order.push(label.to_string());
            }
            lines.entry(label.to_string()).or_default().push(entry);
        }
    }
    ProgressLines {
        goal: tree.goal.clone(),
        lines: order
            .into_iter()
            .map(|object| ProgressLine {
                entries: lines.remove(&object).unwrap_or_default(),
                object,
            })
            .collect(),
    }
}

/// Rebuild the tree that `to_progress_lines` projected.
pub fn reconstruct(doc: &ProgressLines) -> Result<TaskTree, ReconstructError> {
    type Slots = BTreeMap<usize, ObjectNode>;
    let mut units: BTreeMap<usize, (String, Slots, Slots)> = BTreeMap::new();
    for line in &doc.lines {
        for entry in &line.entries {
            let (motion, inputs, outputs) = units
                .entry(entry.unit_index)
                .or_insert_with(|| (entry.motion.clone(), BTreeMap::new(), BTreeMap::new()));
            if *motion != entry.motion {
                return Err(ReconstructError::MotionConflict {
                    unit_index: entry.unit_index,
                });
            }
            for (side, snapshots, slots) in [("input", &entry.inputs, &mut *inputs), ("output", &entry.outputs, &mut *outputs)] {
                for snapshot in snapshots {
                    let node = snapshot.to_node(&line.object)?;
                    if slots.insert(snapshot.slot, node).is_some() {
                        return Err(ReconstructError::BadSlot {
                            unit_index: entry.unit_index,
                            side,
                            slot: snapshot.slot,
                        });
                    }
                }
            }
        }
    }
    let count = units.keys().next_back().map_or(0, |last| last + 1);
    let mut rebuilt = Vec::with_capacity(count);
    for unit_index in 0..count {
        let (motion, inputs, outputs) = units.remove(&unit_index).ok_or(ReconstructError::MissingUnit(unit_index))?;
        let mut sides = Vec::new();
        for (side, slots) in [("input", inputs), ("output", outputs)] {
            if let Some((_, &slot)) = slots.keys().enumerate().find(|(i, slot)| i != *slot) {
                return Err(ReconstructError::BadSlot { unit_index, side, slot });
            }
            sides.push(slots.into_values().collect::<Vec<_>>());
        }
        let outputs = sides.pop().expect("two sides");
        let inputs = sides.pop().expect("two sides");
        rebuilt.push(FunctionalUnit::new(inputs, MotionNode::new(&motion)?, outputs));
    }
    Ok(TaskTree::new(rebuilt, doc.goal.clone()))
}
