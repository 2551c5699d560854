//! Consolidation of many task trees into one deduplicated, validated network.

mod persist;
mod singular;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::interchange::{parse_unit_collection, InterchangeError};
use crate::model::{FunctionalUnit, MotionNode, ObjectKey, ObjectNode, TaskTree, UnitId};
use crate::report::ValidationReport;
use crate::transitions::{validate_unit, TransitionTable};

pub use persist::PersistError;
pub use singular::singularize;

/// Where a unit came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Source {
    /// Index of the generated tree in merge order.
    Tree(usize),
    /// The curated knowledge network.
    Foon,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Tree(i) => write!(f, "tree-{i}"),
            Source::Foon => f.write_str("foon"),
        }
    }
}

impl FromStr for Source {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "foon" {
            return Ok(Source::Foon);
        }
        s.strip_prefix("tree-")
            .and_then(|i| i.parse().ok())
            .map(Source::Tree)
            .ok_or_else(|| format!("unknown source tag `{s}`"))
    }
}

impl Serialize for Source {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Source {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        String::deserialize(deserializer)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// Audit trail for a stored unit.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub sources: BTreeSet<Source>,
    /// `original -> consolidated` label rewrites applied to this unit.
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub renamed: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub source: Source,
    pub unit_index: usize,
    pub unit: FunctionalUnit,
    pub report: ValidationReport,
}

/// Units dropped during consolidation with the findings that caused it.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RejectionLog {
    pub entries: Vec<Rejection>,
}

impl RejectionLog {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, id: UnitId) -> bool {
        self.entries.iter().any(|r| r.unit.id() == id)
    }

    pub fn extend(&mut self, other: RejectionLog) {
        self.entries.extend(other.entries);
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("rejection log serializes")
    }
}

pub type ObjectIndex = BTreeMap<ObjectKey, BTreeSet<UnitId>>;

/// Deduplicated graph of functional units with producer/consumer indexes.
///
/// Invariants: at most one unit per canonical form; the indexes are exactly
/// derivable from the stored units.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UnifiedNetwork {
    units: BTreeMap<UnitId, FunctionalUnit>,
    producers: ObjectIndex,
    consumers: ObjectIndex,
    provenance: BTreeMap<UnitId, Provenance>,
}

impl UnifiedNetwork {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    /// Units in id order.
    pub fn units(&self) -> impl Iterator<Item = &FunctionalUnit> {
        self.units.values()
    }

    pub fn unit_ids(&self) -> BTreeSet<UnitId> {
        self.units.keys().copied().collect()
    }

    pub fn get(&self, id: UnitId) -> Option<&FunctionalUnit> {
        self.units.get(&id)
    }

    pub fn contains(&self, id: UnitId) -> bool {
        self.units.contains_key(&id)
    }

    pub fn producers(&self) -> &ObjectIndex {
        &self.producers
    }

    pub fn consumers(&self) -> &ObjectIndex {
        &self.consumers
    }

    pub fn producers_of(&self, key: &ObjectKey) -> impl Iterator<Item = UnitId> + '_ {
        self.producers.get(key).into_iter().flatten().copied()
    }

    pub fn provenance(&self, id: UnitId) -> Option<&Provenance> {
        self.provenance.get(&id)
    }

    /// Recompute both indexes from the stored units.
    pub fn rebuild_indexes(&self) -> (ObjectIndex, ObjectIndex) {
        let mut producers = ObjectIndex::new();
        let mut consumers = ObjectIndex::new();
        for (id, unit) in &self.units {
            index_unit(&mut producers, &mut consumers, *id, unit);
        }
        (producers, consumers)
    }

    /// Store an already consolidated and validated unit, or record the
    /// additional provenance when an identical unit is present.
    fn insert(&mut self, unit: FunctionalUnit, source: Source, renamed: BTreeSet<String>) {
        let id = unit.id();
        let record = self.provenance.entry(id).or_default();
        record.sources.insert(source);
        record.renamed.extend(renamed);
        if !self.units.contains_key(&id) {
            index_unit(&mut self.producers, &mut self.consumers, id, &unit);
            self.units.insert(id, unit);
        }
    }

    /// Consolidate, validate and insert one unit.
    pub fn add_unit(
        &mut self,
        unit: &FunctionalUnit,
        source: Source,
        unit_index: usize,
        table: &TransitionTable,
    ) -> Result<UnitId, Rejection> {
        let (unit, renamed) = consolidate_unit(unit);
        let report = validate_unit(&unit, table);
        if !report.is_empty() {
            return Err(Rejection {
                source,
                unit_index,
                unit,
                report,
            });
        }
        let id = unit.id();
        self.insert(unit, source, renamed);
        Ok(id)
    }

    /// Add every unit of `units`, collecting rejections.
    pub fn absorb<'a>(
        &mut self,
        units: impl IntoIterator<Item = &'a FunctionalUnit>,
        source: Source,
        table: &TransitionTable,
    ) -> RejectionLog {
        let mut log = RejectionLog::default();
        for (index, unit) in units.into_iter().enumerate() {
            if let Err(rejection) = self.add_unit(unit, source, index, table) {
                log.entries.push(rejection);
            }
        }
        log
    }
}

fn index_unit(producers: &mut ObjectIndex, consumers: &mut ObjectIndex, id: UnitId, unit: &FunctionalUnit) {
    for output in unit.outputs() {
        producers.entry(output.key()).or_default().insert(id);
    }
    for input in unit.inputs() {
        consumers.entry(input.key()).or_default().insert(id);
    }
}

fn consolidate_label(label: &str, renamed: &mut BTreeSet<String>) -> String {
    let single = singularize(label);
    if single != label {
        renamed.insert(format!("{label} -> {single}"));
    }
    single
}

fn consolidate_object(node: &ObjectNode, renamed: &mut BTreeSet<String>) -> ObjectNode {
    node.map_labels(|label| consolidate_label(label, renamed))
}

/// Singularize every object, container, ingredient and motion label.
/// Returns the rewritten unit and the rewrites applied.
pub fn consolidate_unit(unit: &FunctionalUnit) -> (FunctionalUnit, BTreeSet<String>) {
    let mut renamed = BTreeSet::new();
    let inputs = unit
        .inputs()
        .iter()
        .map(|o| consolidate_object(o, &mut renamed))
        .collect();
    let outputs = unit
        .outputs()
        .iter()
        .map(|o| consolidate_object(o, &mut renamed))
        .collect();
    let motion_label = consolidate_label(unit.motion().label(), &mut renamed);
    let motion = MotionNode::new(&motion_label).expect("singular form of a motion label is non-empty");
    (FunctionalUnit::new(inputs, motion, outputs), renamed)
}

pub fn consolidate_object_node(node: &ObjectNode) -> ObjectNode {
    consolidate_object(node, &mut BTreeSet::new())
}

/// Consolidate every label of a tree, including its goal.
pub fn consolidate_tree(tree: &TaskTree) -> TaskTree {
    TaskTree::new(
        tree.units.iter().map(|u| consolidate_unit(u).0).collect(),
        consolidate_object_node(&tree.goal),
    )
}

/// Merge trees into a fresh network. Units failing validation are dropped and
/// logged; duplicates collapse and accumulate provenance.
pub fn merge(trees: &[TaskTree], table: &TransitionTable) -> (UnifiedNetwork, RejectionLog) {
    let mut network = UnifiedNetwork::new();
    let mut log = RejectionLog::default();
    for (index, tree) in trees.iter().enumerate() {
        log.extend(network.absorb(&tree.units, Source::Tree(index), table));
    }
    (network, log)
}

#[derive(Debug, Error)]
pub enum ImportError {
    #[error("cannot read knowledge network: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Parse(#[from] InterchangeError),
}

/// Add the units of a curated network file (tree JSON, `{"units": [..]}` or a
/// bare array) with provenance `foon`.
pub fn import_foon(
    path: impl AsRef<Path>,
    network: &UnifiedNetwork,
    table: &TransitionTable,
) -> Result<(UnifiedNetwork, RejectionLog), ImportError> {
    let units = parse_unit_collection(&std::fs::read_to_string(path)?)?;
    Ok(import_units(&units, network, table))
}

pub fn import_units(
    units: &[FunctionalUnit],
    network: &UnifiedNetwork,
    table: &TransitionTable,
) -> (UnifiedNetwork, RejectionLog) {
    let mut grown = network.clone();
    let log = grown.absorb(units, Source::Foon, table);
    (grown, log)
}
