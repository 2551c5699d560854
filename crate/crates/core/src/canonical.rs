//! Order-independent serialization used as the deduplication key.

use serde::Serialize;

use crate::model::{FunctionalUnit, ObjectNode, TaskTree};

#[derive(Serialize, PartialEq, Eq, PartialOrd, Ord)]
struct CanonObject<'a> {
    label: &'a str,
    states: Vec<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    container: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ingredients: Option<Vec<&'a str>>,
}

impl<'a> CanonObject<'a> {
    fn of(node: &'a ObjectNode) -> Self {
        CanonObject {
            label: node.label(),
            states: node.states().iter().map(String::as_str).collect(),
            container: node.container(),
            ingredients: node
                .ingredients()
                .map(|set| set.iter().map(String::as_str).collect()),
        }
    }
}

#[derive(Serialize)]
struct CanonUnit<'a> {
    inputs: Vec<CanonObject<'a>>,
    motion: &'a str,
    outputs: Vec<CanonObject<'a>>,
}

fn sorted(objects: &[ObjectNode]) -> Vec<CanonObject<'_>> {
    let mut canon: Vec<_> = objects.iter().map(CanonObject::of).collect();
    canon.sort();
    canon
}

/// Deterministic serialization: objects sorted by (label, states, container,
/// ingredients), sets in lexicographic order. Two units are duplicates iff
/// their canonical forms are equal.
pub fn canonical_form(unit: &FunctionalUnit) -> String {
    let canon = CanonUnit {
        inputs: sorted(unit.inputs()),
        motion: unit.motion().label(),
        outputs: sorted(unit.outputs()),
    };
    serde_json::to_string(&canon).expect("canonical unit serializes")
}

/// Canonical form of a whole tree: the goal followed by each unit's canonical
/// form in plan order.
pub fn canonical_tree(tree: &TaskTree) -> String {
    #[derive(Serialize)]
    struct CanonTree<'a> {
        goal: CanonObject<'a>,
        units: Vec<serde_json::Value>,
    }
    let units = tree
        .units
        .iter()
        .map(|u| serde_json::from_str(&canonical_form(u)).expect("canonical form is json"))
        .collect();
    serde_json::to_string(&CanonTree {
        goal: CanonObject::of(&tree.goal),
        units,
    })
    .expect("canonical tree serializes")
}
