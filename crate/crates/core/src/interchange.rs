//! JSON interchange for functional units and task trees.
//!
//! Unit: `{"inputs": [..], "motion": "pour", "outputs": [..]}`. Object:
//! `{"label": "milk", "states": ["in [bottle]"], "container"?: "..",
//! "ingredients"?: [..]}`. Tree: `{"goal": <object>, "units": [<unit>..]}`.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;
use thiserror::Error;

use crate::model::{FunctionalUnit, ModelError, MotionNode, ObjectNode, TaskTree};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InterchangeError {
    #[error("malformed JSON at line {line}, column {column}: {message}")]
    MalformedJson {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema violation at `{path}`: {message}")]
    SchemaViolation { path: String, message: String },
}

fn violation(path: impl Into<String>, message: impl ToString) -> InterchangeError {
    InterchangeError::SchemaViolation {
        path: path.into(),
        message: message.to_string(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawObject {
    label: String,
    states: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    container: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ingredients: Option<Vec<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawUnit {
    inputs: Vec<RawObject>,
    motion: String,
    outputs: Vec<RawObject>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawTree {
    goal: RawObject,
    units: Vec<RawUnit>,
}

impl RawObject {
    fn of(node: &ObjectNode) -> Self {
        RawObject {
            label: node.label().to_string(),
            states: node.states().iter().cloned().collect(),
            container: node.container().map(str::to_string),
            ingredients: node.ingredients().map(|set| set.iter().cloned().collect()),
        }
    }

    fn build(&self) -> Result<ObjectNode, ModelError> {
        let mut node = ObjectNode::new(&self.label, &self.states)?;
        if let Some(place) = &self.container {
            node = node.in_container(place)?;
        }
        if let Some(ingredients) = &self.ingredients {
            node = node.with_ingredients(ingredients)?;
        }
        Ok(node)
    }
}

impl RawUnit {
    fn of(unit: &FunctionalUnit) -> Self {
        RawUnit {
            inputs: unit.inputs().iter().map(RawObject::of).collect(),
            motion: unit.motion().label().to_string(),
            outputs: unit.outputs().iter().map(RawObject::of).collect(),
        }
    }

    /// Build the unit; `strict` additionally enforces non-empty sides.
    fn build(&self, path: &str, strict: bool) -> Result<FunctionalUnit, InterchangeError> {
        let side = |objects: &[RawObject], name: &str| {
            if strict && objects.is_empty() {
                return Err(violation(
                    format!("{path}{name}"),
                    "a functional unit needs at least one object here",
                ));
            }
            objects
                .iter()
                .enumerate()
                .map(|(i, raw)| raw.build().map_err(|e| violation(format!("{path}{name}[{i}]"), e)))
                .collect::<Result<Vec<_>, _>>()
        };
        let inputs = side(&self.inputs, "inputs")?;
        let motion = MotionNode::new(&self.motion).map_err(|e| violation(format!("{path}motion"), e))?;
        let outputs = side(&self.outputs, "outputs")?;
        Ok(FunctionalUnit::new(inputs, motion, outputs))
    }
}

fn parse_value(text: &str) -> Result<Value, InterchangeError> {
    serde_json::from_str(text).map_err(|e| InterchangeError::MalformedJson {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

fn typed<T: for<'de> Deserialize<'de>>(value: Value) -> Result<T, InterchangeError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        violation(path, e.into_inner())
    })
}

/// Parse one functional unit, normalizing every label.
pub fn parse_functional_unit(text: &str) -> Result<FunctionalUnit, InterchangeError> {
    let raw: RawUnit = typed(parse_value(text)?)?;
    raw.build("", true)
}

/// Parse a task tree. Units are not validated beyond their schema.
pub fn parse_task_tree(text: &str) -> Result<TaskTree, InterchangeError> {
    let raw: RawTree = typed(parse_value(text)?)?;
    tree_from_raw(&raw)
}

fn tree_from_raw(raw: &RawTree) -> Result<TaskTree, InterchangeError> {
    let goal = raw.goal.build().map_err(|e| violation("goal", e))?;
    let units = raw
        .units
        .iter()
        .enumerate()
        .map(|(i, u)| u.build(&format!("units[{i}]."), true))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(TaskTree::new(units, goal))
}

/// Parse a flat list of units. Accepts a bare array, an object with a `units`
/// array (FOON subgraph export), or a full task tree.
pub fn parse_unit_collection(text: &str) -> Result<Vec<FunctionalUnit>, InterchangeError> {
    let value = parse_value(text)?;
    let (raw_units, prefix): (Vec<RawUnit>, &str) = match value {
        Value::Array(_) => (typed(value)?, ""),
        Value::Object(mut map) => match map.remove("units") {
            Some(units) => (typed(units)?, "units"),
            None => return Err(violation("units", "missing field `units`")),
        },
        _ => return Err(violation("", "expected an array of units or an object")),
    };
    raw_units
        .iter()
        .enumerate()
        .map(|(i, u)| u.build(&format!("{prefix}[{i}]."), true))
        .collect()
}

pub fn unit_to_value(unit: &FunctionalUnit) -> Value {
    serde_json::to_value(RawUnit::of(unit)).expect("unit serializes")
}

pub fn unit_to_json(unit: &FunctionalUnit) -> String {
    serde_json::to_string(&RawUnit::of(unit)).expect("unit serializes")
}

pub fn tree_to_json_pretty(tree: &TaskTree) -> String {
    serde_json::to_string_pretty(tree).expect("tree serializes")
}

impl Serialize for ObjectNode {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        RawObject::of(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ObjectNode {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        RawObject::deserialize(deserializer)?
            .build()
            .map_err(serde::de::Error::custom)
    }
}

impl Serialize for FunctionalUnit {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        RawUnit::of(self).serialize(serializer)
    }
}

/// Lenient: arity is not enforced so that rejected units can be stored and
/// reloaded.
impl<'de> Deserialize<'de> for FunctionalUnit {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        RawUnit::deserialize(deserializer)?
            .build("", false)
            .map_err(serde::de::Error::custom)
    }
}

impl Serialize for TaskTree {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        RawTree {
            goal: RawObject::of(&self.goal),
            units: self.units.iter().map(RawUnit::of).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for TaskTree {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = RawTree::deserialize(deserializer)?;
        tree_from_raw(&raw).map_err(serde::de::Error::custom)
    }
}
