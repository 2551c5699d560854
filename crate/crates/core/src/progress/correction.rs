//! Structured edits made against progress lines, applied back to the tree.
//!
//! A container patch moves an object, so it follows the object forward: to
//! outputs of the same unit that kept the old container, and from there to
//! every later input linked to a changed output. A state patch stays local.
//! After any edit the tree must still validate unit by unit, every input that
//! was produced by an earlier unit must still be, and the goal must still be
//! reached.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{FunctionalUnit, ObjectNode, TaskTree};
use crate::report::ValidationReport;
use crate::transitions::{validate_unit, TransitionTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Input,
    Output,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Correction {
    /// Replace the states and/or container of one occurrence. Without `side`
    /// the input occurrence is chosen when there is one; without `slot` the
    /// first occurrence on that side.
    Patch {
        object: String,
        unit_index: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        side: Option<Side>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        slot: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        states: Option<Vec<String>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        container: Option<String>,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        clear_container: bool,
    },
    DeleteUnit {
        unit_index: usize,
    },
    InsertUnit {
        position: usize,
        unit: FunctionalUnit,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorrectionError {
    #[error("target not found: {0}")]
    TargetNotFound(String),
    #[error("unit {unit_index}: {reason}")]
    ConsistencyViolation { unit_index: usize, reason: String },
    #[error("unit {unit_index} is invalid: {report}")]
    InvalidUnit {
        unit_index: usize,
        report: ValidationReport,
    },
    #[error("malformed patch: {0}")]
    MalformedPatch(String),
}

type Occurrence = (usize, Side, usize);

fn node_at(tree: &TaskTree, (unit, side, slot): Occurrence) -> &ObjectNode {
    match side {
        Side::Input => &tree.units[unit].inputs()[slot],
        Side::Output => &tree.units[unit].outputs()[slot],
    }
}

fn locate(tree: &TaskTree, object: &str, unit_index: usize, side: Option<Side>, slot: Option<usize>) -> Result<Occurrence, CorrectionError> {
    let unit = tree
        .units
        .get(unit_index)
        .ok_or_else(|| CorrectionError::TargetNotFound(format!("unit {unit_index}")))?;
    let label = crate::model::normalize_label(object);
    let slots = |nodes: &[ObjectNode]| -> Vec<usize> {
        nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.label() == label)
            .map(|(i, _)| i)
            .collect()
    };
    let inputs = slots(unit.inputs());
    let outputs = slots(unit.outputs());
    let side = match side {
        Some(side) => side,
        None if !inputs.is_empty() => Side::Input,
        None => Side::Output,
    };
    let candidates = match side {
        Side::Input => inputs,
        Side::Output => outputs,
    };
    let chosen = match slot {
        Some(slot) => candidates.into_iter().find(|&s| s == slot),
        None => candidates.into_iter().next(),
    };
    chosen
        .map(|slot| (unit_index, side, slot))
        .ok_or_else(|| CorrectionError::TargetNotFound(format!("`{label}` in unit {unit_index}")))
}

/// Occurrences that carry the same physical object as `start` forward in
/// time while it stays in `old_container`.
fn container_followers(tree: &TaskTree, start: Occurrence) -> BTreeSet<Occurrence> {
    let links = tree.input_links();
    let start_node = node_at(tree, start);
    let label = start_node.label();
    let old_container = start_node.container();
    let mut changed = BTreeSet::from([start]);
    let mut frontier = vec![start];
    let mut seen_leaf = false;
    while let Some((unit, side, slot)) = frontier.pop() {
        let node = node_at(tree, (unit, side, slot));
        let next: Vec<Occurrence> = match side {
            Side::Input => {
                let mut next: Vec<Occurrence> = tree.units[unit]
                    .outputs()
                    .iter()
                    .enumerate()
                    .filter(|(_, o)| o.label() == label && o.container() == old_container)
                    .map(|(s, _)| (unit, Side::Output, s))
                    .collect();
                // A starting object used by several units without being
                // produced is the same object each time.
                if links[unit][slot].is_none() && !seen_leaf {
                    seen_leaf = true;
                    let key = node.key();
                    for (k, unit_links) in links.iter().enumerate() {
                        for (s, link) in unit_links.iter().enumerate() {
                            if link.is_none() && tree.units[k].inputs()[s].key() == key {
                                next.push((k, Side::Input, s));
                            }
                        }
                    }
                }
                next
            }
            Side::Output => {
                let key = node.key();
                links
                    .iter()
                    .enumerate()
                    .skip(unit + 1)
                    .flat_map(|(k, unit_links)| {
                        unit_links
                            .iter()
                            .enumerate()
                            .filter(move |(_, link)| **link == Some(unit))
                            .map(move |(s, _)| (k, s))
                    })
                    .filter(|&(k, s)| tree.units[k].inputs()[s].key() == key)
                    .map(|(k, s)| (k, Side::Input, s))
                    .collect()
            }
        };
        for occurrence in next {
            if changed.insert(occurrence) {
                frontier.push(occurrence);
            }
        }
    }
    changed
}

fn rebuild_unit(unit: &FunctionalUnit, mut edit: impl FnMut(Side, usize, &ObjectNode) -> Result<ObjectNode, CorrectionError>) -> Result<FunctionalUnit, CorrectionError> {
    let inputs = unit
        .inputs()
        .iter()
        .enumerate()
        .map(|(s, n)| edit(Side::Input, s, n))
        .collect::<Result<Vec<_>, _>>()?;
    let outputs = unit
        .outputs()
        .iter()
        .enumerate()
        .map(|(s, n)| edit(Side::Output, s, n))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(FunctionalUnit::new(inputs, unit.motion().clone(), outputs))
}

#[allow(clippy::too_many_arguments)]
fn patch(
    tree: &TaskTree,
    object: &str,
    unit_index: usize,
    side: Option<Side>,
    slot: Option<usize>,
    states: Option<&[String]>,
    container: Option<&str>,
    clear_container: bool,
) -> Result<TaskTree, CorrectionError> {
    if container.is_some() && clear_container {
        return Err(CorrectionError::MalformedPatch("both container and clear_container given".into()));
    }
    let target = locate(tree, object, unit_index, side, slot)?;
    let moves = container.is_some() || clear_container;
    let current = node_at(tree, target);
    let new_container = if clear_container { None } else { container.or(current.container()) };
    let moved = if moves && new_container != current.container() {
        container_followers(tree, target)
    } else {
        BTreeSet::new()
    };
    let malformed = |e: crate::model::ModelError| CorrectionError::MalformedPatch(e.to_string());
    let mut goal = tree.goal.clone();
    let last = tree.units.len() - 1;
    let mut units = Vec::with_capacity(tree.units.len());
    for (k, unit) in tree.units.iter().enumerate() {
        units.push(rebuild_unit(unit, |side, s, node| {
            let here = (k, side, s);
            let mut next = node.clone();
            if here == target {
                if let Some(states) = states {
                    next = next.with_states(states).map_err(malformed)?;
                }
            }
            if moved.contains(&here) {
                next = next.with_container(new_container).map_err(malformed)?;
            }
            if k == last && side == Side::Output && *node == tree.goal && next != *node {
                goal = next.clone();
            }
            Ok(next)
        })?);
    }
    Ok(TaskTree::new(units, goal))
}

/// Apply `correction`, returning the edited tree or the reason it was
/// rejected. A patch that changes nothing returns an identical tree.
pub fn apply_correction(tree: &TaskTree, correction: &Correction, table: &TransitionTable) -> Result<TaskTree, CorrectionError> {
    // Maps each unit of the edited tree to its index in the original.
    let mut origin: Vec<Option<usize>> = (0..tree.units.len()).map(Some).collect();
    let edited = match correction {
        Correction::Patch {
            object,
            unit_index,
            side,
            slot,
            states,
            container,
            clear_container,
        } => patch(
            tree,
            object,
            *unit_index,
            *side,
            *slot,
            states.as_deref(),
            container.as_deref(),
            *clear_container,
        )?,
        Correction::DeleteUnit { unit_index } => {
            if *unit_index >= tree.units.len() {
                return Err(CorrectionError::TargetNotFound(format!("unit {unit_index}")));
            }
            let mut units = tree.units.clone();
            units.remove(*unit_index);
            origin.remove(*unit_index);
            TaskTree::new(units, tree.goal.clone())
        }
        Correction::InsertUnit { position, unit } => {
            if *position > tree.units.len() {
                return Err(CorrectionError::TargetNotFound(format!("position {position}")));
            }
            let mut units = tree.units.clone();
            units.insert(*position, unit.clone());
            origin.insert(*position, None);
            TaskTree::new(units, tree.goal.clone())
        }
    };
    if edited == *tree {
        return Ok(edited);
    }
    for (unit_index, unit) in edited.units.iter().enumerate() {
        let report = validate_unit(unit, table);
        if !report.is_empty() {
            return Err(CorrectionError::InvalidUnit { unit_index, report });
        }
    }
    check_consistency(tree, &edited, &origin)?;
    Ok(edited)
}

fn check_consistency(before: &TaskTree, after: &TaskTree, origin: &[Option<usize>]) -> Result<(), CorrectionError> {
    if after.units.is_empty() {
        return Err(CorrectionError::ConsistencyViolation {
            unit_index: 0,
            reason: "tree has no units left".into(),
        });
    }
    let old_links = before.input_links();
    let new_links = after.input_links();
    for (k, old) in origin.iter().enumerate() {
        let Some(old) = old else { continue };
        for (slot, link) in old_links[*old].iter().enumerate() {
            if link.is_some() && new_links[k][slot].is_none() {
                return Err(CorrectionError::ConsistencyViolation {
                    unit_index: k,
                    reason: format!(
                        "input `{}` is no longer produced by an earlier unit",
                        after.units[k].inputs()[slot]
                    ),
                });
            }
        }
    }
    if !after.goal_reached() {
        return Err(CorrectionError::ConsistencyViolation {
            unit_index: after.units.len() - 1,
            reason: format!("goal `{}` is no longer reached", after.goal),
        });
    }
    Ok(())
}
