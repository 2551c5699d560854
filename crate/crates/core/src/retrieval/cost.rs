use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use crate::model::{normalize_label, TaskTree};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CostError {
    #[error("cost for `{motion}` is {value}, outside [0, 1]")]
    OutOfRange { motion: String, value: String },
    #[error("malformed cost file: {0}")]
    Format(String),
}

/// Per-motion execution difficulty in `[0, 1]`, with a fallback for motions
/// the table does not list.
#[derive(Debug, Clone, PartialEq)]
pub struct CostModel<S> {
    costs: BTreeMap<String, S>,
    default_cost: S,
}

fn in_unit_range<S: Scalar>(value: &S) -> bool {
    *value >= S::zero() && *value <= S::one()
}

impl<S: Scalar> CostModel<S> {
    pub fn new(costs: BTreeMap<String, S>, default_cost: S) -> Result<Self, CostError> {
        if !in_unit_range(&default_cost) {
            return Err(CostError::OutOfRange {
                motion: "<default>".into(),
                value: format!("{default_cost:?}"),
            });
        }
        let mut normalized = BTreeMap::new();
        for (motion, value) in costs {
            if !in_unit_range(&value) {
                return Err(CostError::OutOfRange {
                    motion,
                    value: format!("{value:?}"),
                });
            }
            normalized.insert(normalize_label(&motion), value);
        }
        Ok(CostModel {
            costs: normalized,
            default_cost,
        })
    }

    /// Costs used for the reference single-arm robot: scooping 0.4, pouring
    /// 0.1, mixing 0.2; anything else 0.5.
    pub fn reference_robot() -> Self {
        let decimal = |text| S::from_decimal(text).expect("literal cost parses");
        let costs = [("scoop", "0.4"), ("pour", "0.1"), ("mix", "0.2")]
            .into_iter()
            .map(|(m, c)| (m.to_string(), decimal(c)))
            .collect();
        CostModel::new(costs, decimal("0.5")).expect("reference costs are in range")
    }

    /// Every motion priced at zero.
    pub fn free() -> Self {
        CostModel {
            costs: BTreeMap::new(),
            default_cost: S::zero(),
        }
    }

    pub fn cost_of(&self, motion: &str) -> S {
        self.costs
            .get(motion)
            .cloned()
            .unwrap_or_else(|| self.default_cost.clone())
    }

    pub fn default_cost(&self) -> &S {
        &self.default_cost
    }

    pub fn costs(&self) -> &BTreeMap<String, S> {
        &self.costs
    }

    /// Multiply every cost by `factor`, without the range check.
    pub fn scaled(&self, factor: &S) -> Self {
        CostModel {
            costs: self
                .costs
                .iter()
                .map(|(m, c)| (m.clone(), c.clone() * factor.clone()))
                .collect(),
            default_cost: self.default_cost.clone() * factor.clone(),
        }
    }

    /// Parse `{"default": 0.5, "costs": {"pour": 0.1, ...}}`. Numbers are
    /// read from their decimal text, so rational scalars are exact.
    pub fn from_json(text: &str) -> Result<Self, CostError> {
        let value: Value = serde_json::from_str(text).map_err(|e| CostError::Format(e.to_string()))?;
        let number = |v: &Value, what: &str| -> Result<S, CostError> {
            match v {
                Value::Number(n) => S::from_decimal(&n.to_string())
                    .ok_or_else(|| CostError::Format(format!("`{what}` is not a usable number"))),
                _ => Err(CostError::Format(format!("`{what}` must be a number"))),
            }
        };
        let default_cost = match value.get("default") {
            Some(v) => number(v, "default")?,
            None => S::from_decimal("0.5").expect("0.5 parses"),
        };
        let mut costs = BTreeMap::new();
        match value.get("costs") {
            Some(Value::Object(map)) => {
                for (motion, v) in map {
                    costs.insert(motion.clone(), number(v, motion)?);
                }
            }
            Some(_) => return Err(CostError::Format("`costs` must be an object".into())),
            None => {}
        }
        CostModel::new(costs, default_cost)
    }

    pub fn to_json_pretty(&self) -> String {
        #[derive(Serialize)]
        struct File<'a> {
            default: f64,
            costs: BTreeMap<&'a str, f64>,
        }
        let file = File {
            default: self.default_cost.to_f64(),
            costs: self.costs.iter().map(|(m, c)| (m.as_str(), c.to_f64())).collect(),
        };
        serde_json::to_string_pretty(&file).expect("cost model serializes")
    }
}

/// Sum of motion costs over the tree's units, in plan order.
pub fn tree_cost<S: Scalar>(tree: &TaskTree, model: &CostModel<S>) -> S {
    tree.motions()
        .fold(S::zero(), |acc, motion| acc + model.cost_of(motion))
}
