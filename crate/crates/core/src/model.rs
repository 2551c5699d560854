//! Object nodes, motion nodes, functional units and task trees.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::canonical::canonical_form;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("{what} label is empty")]
    EmptyLabel { what: &'static str },
    #[error("object `{object}` has an empty state string")]
    EmptyState { object: String },
    #[error("object `{object}` is placed in both `{first}` and `{second}`")]
    ConflictingContainer {
        object: String,
        first: String,
        second: String,
    },
    #[error("object `{object}` lists itself as an ingredient")]
    SelfIngredient { object: String },
}

/// Lowercase, trim and collapse internal whitespace runs to one space.
pub fn normalize_label(raw: &str) -> String {
    raw.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Recognizes the FOON location convention `in [container]`.
fn location_state(state: &str) -> Option<&str> {
    let inner = state.strip_prefix("in [")?.strip_suffix(']')?;
    let inner = inner.trim();
    (!inner.is_empty()).then_some(inner)
}

/// An object at one point of a plan: what it is, what condition it is in, and
/// where it is.
///
/// States form a set. A state written as `in [bowl]` is lifted into the
/// container field at construction.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ObjectNode {
    label: String,
    states: BTreeSet<String>,
    container: Option<String>,
    ingredients: Option<BTreeSet<String>>,
}

impl ObjectNode {
    pub fn new<I, S>(label: &str, states: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let label = normalize_label(label);
        if label.is_empty() {
            return Err(ModelError::EmptyLabel { what: "object" });
        }
        let mut node = ObjectNode {
            label,
            states: BTreeSet::new(),
            container: None,
            ingredients: None,
        };
        for raw in states {
            let state = normalize_label(raw.as_ref());
            if state.is_empty() {
                return Err(ModelError::EmptyState { object: node.label });
            }
            match location_state(&state) {
                Some(place) => {
                    let place = place.to_string();
                    node.set_container(place)?;
                }
                None => {
                    node.states.insert(state);
                }
            }
        }
        Ok(node)
    }

    fn set_container(&mut self, place: String) -> Result<(), ModelError> {
        match &self.container {
            Some(existing) if *existing != place => Err(ModelError::ConflictingContainer {
                object: self.label.clone(),
                first: existing.clone(),
                second: place,
            }),
            _ => {
                self.container = Some(place);
                Ok(())
            }
        }
    }

    /// Place the object in `container` (normalized). Conflicts with a
    /// container lifted from an `in [..]` state are errors.
    pub fn in_container(mut self, container: &str) -> Result<Self, ModelError> {
        let place = normalize_label(container);
        if place.is_empty() {
            return Err(ModelError::EmptyLabel { what: "container" });
        }
        self.set_container(place)?;
        Ok(self)
    }

    pub fn with_ingredients<I, S>(mut self, ingredients: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut set = BTreeSet::new();
        for raw in ingredients {
            let name = normalize_label(raw.as_ref());
            if name.is_empty() {
                return Err(ModelError::EmptyLabel { what: "ingredient" });
            }
            if name == self.label {
                return Err(ModelError::SelfIngredient {
                    object: self.label.clone(),
                });
            }
            set.insert(name);
        }
        self.ingredients = Some(set);
        Ok(self)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn states(&self) -> &BTreeSet<String> {
        &self.states
    }

    pub fn container(&self) -> Option<&str> {
        self.container.as_deref()
    }

    pub fn ingredients(&self) -> Option<&BTreeSet<String>> {
        self.ingredients.as_ref()
    }

    /// True when the object carries a state or a location.
    pub fn has_assigned_state(&self) -> bool {
        !self.states.is_empty() || self.container.is_some()
    }

    pub fn key(&self) -> ObjectKey {
        ObjectKey {
            label: self.label.clone(),
            states: self.states.clone(),
            container: self.container.clone(),
        }
    }

    /// Whether this object can stand in for `required`: same label, every
    /// required state present, and the same container when one is required.
    pub fn satisfies(&self, required: &ObjectNode) -> bool {
        self.label == required.label
            && required.states.is_subset(&self.states)
            && match &required.container {
                Some(place) => self.container.as_ref() == Some(place),
                None => true,
            }
    }

    /// Copy with the state set replaced. States are normalized; location
    /// states are not accepted here.
    pub fn with_states<I, S>(&self, states: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut next = self.clone();
        next.states.clear();
        for raw in states {
            let state = normalize_label(raw.as_ref());
            if state.is_empty() {
                return Err(ModelError::EmptyState {
                    object: self.label.clone(),
                });
            }
            next.states.insert(state);
        }
        Ok(next)
    }

    /// Copy with the container replaced or removed.
    pub fn with_container(&self, container: Option<&str>) -> Result<Self, ModelError> {
        let mut next = self.clone();
        next.container = match container {
            Some(raw) => {
                let place = normalize_label(raw);
                if place.is_empty() {
                    return Err(ModelError::EmptyLabel { what: "container" });
                }
                Some(place)
            }
            None => None,
        };
        Ok(next)
    }

    /// Rewrite the object label, container label and ingredient labels.
    pub(crate) fn map_labels(&self, mut rename: impl FnMut(&str) -> String) -> Self {
        let label = rename(&self.label);
        let ingredients = self.ingredients.as_ref().map(|set| {
            set.iter()
                .map(|name| rename(name))
                .filter(|name| *name != label)
                .collect()
        });
        ObjectNode {
            container: self.container.as_deref().map(&mut rename),
            states: self.states.clone(),
            ingredients,
            label,
        }
    }
}

impl fmt::Display for ObjectNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label)?;
        let states: Vec<&str> = self.states.iter().map(String::as_str).collect();
        write!(f, " [{}]", states.join(", "))?;
        if let Some(place) = &self.container {
            write!(f, " in {place}")?;
        }
        Ok(())
    }
}

/// State-qualified identity of an object occurrence: label, states and
/// container. Ingredients do not participate.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ObjectKey {
    pub label: String,
    pub states: BTreeSet<String>,
    pub container: Option<String>,
}

impl fmt::Display for ObjectKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let states: Vec<&str> = self.states.iter().map(String::as_str).collect();
        write!(f, "{}{{{}}}", self.label, states.join(","))?;
        if let Some(place) = &self.container {
            write!(f, "@{place}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MotionNode(String);

impl MotionNode {
    pub fn new(label: &str) -> Result<Self, ModelError> {
        let label = normalize_label(label);
        if label.is_empty() {
            return Err(ModelError::EmptyLabel { what: "motion" });
        }
        Ok(MotionNode(label))
    }

    pub fn label(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for MotionNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Stable 64-bit content hash of a unit's canonical form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UnitId(pub u64);

impl UnitId {
    pub fn of_canonical(canonical: &str) -> Self {
        let digest = Sha256::digest(canonical.as_bytes());
        let mut bytes = [0u8; 8];
        bytes.copy_from_slice(&digest[..8]);
        UnitId(u64::from_be_bytes(bytes))
    }
}

impl fmt::Display for UnitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

impl FromStr for UnitId {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        u64::from_str_radix(s, 16).map(UnitId)
    }
}

impl Serialize for UnitId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for UnitId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// One action: the objects it needs, the motion, and the objects it yields.
///
/// The id is derived from the canonical form at construction. Arity is not
/// enforced here; [`crate::check_syntax`] reports violations.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FunctionalUnit {
    inputs: Vec<ObjectNode>,
    motion: MotionNode,
    outputs: Vec<ObjectNode>,
    id: UnitId,
}

impl FunctionalUnit {
    pub fn new(inputs: Vec<ObjectNode>, motion: MotionNode, outputs: Vec<ObjectNode>) -> Self {
        let mut unit = FunctionalUnit {
            inputs,
            motion,
            outputs,
            id: UnitId(0),
        };
        unit.id = UnitId::of_canonical(&canonical_form(&unit));
        unit
    }

    pub fn inputs(&self) -> &[ObjectNode] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[ObjectNode] {
        &self.outputs
    }

    pub fn motion(&self) -> &MotionNode {
        &self.motion
    }

    pub fn id(&self) -> UnitId {
        self.id
    }

    pub fn into_parts(self) -> (Vec<ObjectNode>, MotionNode, Vec<ObjectNode>) {
        (self.inputs, self.motion, self.outputs)
    }

    /// Whether any output has exactly this key.
    pub fn produces(&self, key: &ObjectKey) -> bool {
        self.outputs.iter().any(|o| o.key() == *key)
    }
}

impl fmt::Display for FunctionalUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = |objects: &[ObjectNode]| {
            objects
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join("; ")
        };
        write!(
            f,
            "{} -({})-> {}",
            side(&self.inputs),
            self.motion,
            side(&self.outputs)
        )
    }
}

/// An ordered plan of functional units ending in a goal object.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskTree {
    pub units: Vec<FunctionalUnit>,
    pub goal: ObjectNode,
}

impl TaskTree {
    pub fn new(units: Vec<FunctionalUnit>, goal: ObjectNode) -> Self {
        TaskTree { units, goal }
    }

    /// For every unit input, the index of the most recent earlier unit that
    /// outputs the same key, if any.
    pub fn input_links(&self) -> Vec<Vec<Option<usize>>> {
        self.units
            .iter()
            .enumerate()
            .map(|(k, unit)| {
                unit.inputs()
                    .iter()
                    .map(|input| {
                        let key = input.key();
                        (0..k).rev().find(|&j| self.units[j].produces(&key))
                    })
                    .collect()
            })
            .collect()
    }

    /// Inputs not produced by an earlier unit, deduplicated, in order of
    /// first use. These are the raw starting objects.
    pub fn leaves(&self) -> Vec<ObjectNode> {
        let links = self.input_links();
        let mut seen = BTreeSet::new();
        let mut leaves = Vec::new();
        for (unit, unit_links) in self.units.iter().zip(&links) {
            for (input, link) in unit.inputs().iter().zip(unit_links) {
                if link.is_none() && seen.insert(input.clone()) {
                    leaves.push(input.clone());
                }
            }
        }
        leaves
    }

    /// Whether the final unit yields an object satisfying the goal.
    pub fn goal_reached(&self) -> bool {
        self.units
            .last()
            .is_some_and(|last| last.outputs().iter().any(|o| o.satisfies(&self.goal)))
    }

    pub fn motions(&self) -> impl Iterator<Item = &str> {
        self.units.iter().map(|u| u.motion().label())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obj(label: &str, states: &[&str]) -> ObjectNode {
        ObjectNode::new(label, states).unwrap()
    }

    #[test]
    fn labels_are_normalized() {
        let node = ObjectNode::new("  Red   Onion ", ["Whole "]).unwrap();
        assert_eq!(node.label(), "red onion");
        assert!(node.states().contains("whole"));
    }

    #[test]
    fn location_state_lifts_into_container() {
        let milk = obj("milk", &["in [Bottle]", "liquid"]);
        assert_eq!(milk.container(), Some("bottle"));
        assert_eq!(milk.states().len(), 1);
        assert!(milk.has_assigned_state());
    }

    #[test]
    fn conflicting_locations_are_rejected() {
        let err = ObjectNode::new("milk", ["in [bottle]", "in [cup]"]).unwrap_err();
        assert!(matches!(err, ModelError::ConflictingContainer { .. }));
        let err = obj("milk", &["in [bottle]"]).in_container("cup").unwrap_err();
        assert!(matches!(err, ModelError::ConflictingContainer { .. }));
        assert!(obj("milk", &["in [bottle]"]).in_container("Bottle").is_ok());
    }

    #[test]
    fn duplicate_states_collapse() {
        let node = obj("onion", &["whole", "Whole", "whole "]);
        assert_eq!(node.states().len(), 1);
    }

    #[test]
    fn empty_labels_and_states_are_errors() {
        assert!(ObjectNode::new("   ", ["x"]).is_err());
        assert!(ObjectNode::new("onion", [""]).is_err());
        assert!(MotionNode::new(" ").is_err());
    }

    #[test]
    fn self_ingredient_is_rejected() {
        let err = obj("salad", &["mixed"])
            .with_ingredients(["tomato", "Salad"])
            .unwrap_err();
        assert!(matches!(err, ModelError::SelfIngredient { .. }));
    }

    #[test]
    fn satisfies_uses_state_subset_and_container() {
        let have = obj("tomato", &["whole", "red"]).in_container("basket").unwrap();
        assert!(have.satisfies(&obj("tomato", &["whole"])));
        assert!(have.satisfies(&obj("tomato", &[]).in_container("basket").unwrap()));
        assert!(!have.satisfies(&obj("tomato", &["sliced"])));
        assert!(!have.satisfies(&obj("tomato", &[]).in_container("bowl").unwrap()));
    }

    #[test]
    fn unit_id_round_trips_as_hex() {
        let id = UnitId(0x00ab_cdef_0123_4567);
        assert_eq!(id.to_string(), "00abcdef01234567");
        assert_eq!("00abcdef01234567".parse::<UnitId>().unwrap(), id);
    }

    #[test]
    fn leaves_and_links_follow_outputs() {
        let slice = FunctionalUnit::new(
            vec![obj("onion", &["whole"]), obj("knife", &["clean"])],
            MotionNode::new("slice").unwrap(),
            vec![obj("onion", &["sliced"])],
        );
        let fry = FunctionalUnit::new(
            vec![obj("onion", &["sliced"]), obj("pan", &["hot"])],
            MotionNode::new("fry").unwrap(),
            vec![obj("onion", &["fried"])],
        );
        let tree = TaskTree::new(vec![slice, fry], obj("onion", &["fried"]));
        assert_eq!(tree.input_links(), vec![vec![None, None], vec![Some(0), None]]);
        let leaves: Vec<_> = tree.leaves().iter().map(|o| o.label().to_string()).collect();
        assert_eq!(leaves, ["onion", "knife", "pan"]);
        assert!(tree.goal_reached());
    }
}
