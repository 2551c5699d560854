//! Plans behind the HTTP service, optionally persisted as plain JSON.
//!
//! Layout under the data directory:
//!
//! ```text
//! index.json                    {"next_id": n, "plans": {"<id>": {"version": v}}}
//! plans/<id>/network.json       merged network
//! plans/<id>/rejections.json    units dropped while merging
//! plans/<id>/tree_v<v>.json     the plan's tree at every version
//! ```
//!
//! Files are replaced by write-then-rename so a crash leaves either the old
//! or the new version.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use treeplan_core::interchange::tree_to_json_pretty;
use treeplan_core::{parse_task_tree, RejectionLog, TaskTree, TransitionTable, UnifiedNetwork};

/// One immutable version of a plan. Readers hold an `Arc` to it while the
/// store moves on.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub id: String,
    pub version: u64,
    pub tree: TaskTree,
    pub network: Arc<UnifiedNetwork>,
    pub rejections: Arc<RejectionLog>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct Index {
    next_id: u64,
    plans: BTreeMap<String, IndexEntry>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct IndexEntry {
    version: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{path}: {message}")]
    Corrupt { path: PathBuf, message: String },
}

#[derive(Debug, Default)]
pub struct Store {
    dir: Option<PathBuf>,
    next_id: u64,
    plans: BTreeMap<String, Arc<Snapshot>>,
}

fn io(path: &Path, e: impl std::fmt::Display) -> StoreError {
    StoreError::Io { path: path.to_path_buf(), message: e.to_string() }
}

fn corrupt(path: &Path, e: impl std::fmt::Display) -> StoreError {
    StoreError::Corrupt { path: path.to_path_buf(), message: e.to_string() }
}

fn write_atomic(path: &Path, text: &str) -> Result<(), StoreError> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, text).map_err(|e| io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| io(path, e))
}

fn read(path: &Path) -> Result<String, StoreError> {
    std::fs::read_to_string(path).map_err(|e| io(path, e))
}

impl Store {
    pub fn in_memory() -> Self {
        Store::default()
    }

    /// Open (or create) a data directory, reloading and revalidating every
    /// stored plan.
    pub fn open(dir: impl Into<PathBuf>, table: &TransitionTable) -> Result<Self, StoreError> {
        let dir = dir.into();
        std::fs::create_dir_all(dir.join("plans")).map_err(|e| io(&dir, e))?;
        let index_path = dir.join("index.json");
        let index: Index = if index_path.exists() {
            serde_json::from_str(&read(&index_path)?).map_err(|e| corrupt(&index_path, e))?
        } else {
            Index::default()
        };
        let mut plans = BTreeMap::new();
        for (id, entry) in &index.plans {
            let base = dir.join("plans").join(id);
            let network_path = base.join("network.json");
            let network = UnifiedNetwork::from_json(&read(&network_path)?, Some(table))
                .map_err(|e| corrupt(&network_path, e))?;
            let rejections_path = base.join("rejections.json");
            let rejections: RejectionLog =
                serde_json::from_str(&read(&rejections_path)?).map_err(|e| corrupt(&rejections_path, e))?;
            let tree_path = base.join(format!("tree_v{}.json", entry.version));
            let tree = parse_task_tree(&read(&tree_path)?).map_err(|e| corrupt(&tree_path, e))?;
            plans.insert(
                id.clone(),
                Arc::new(Snapshot {
                    id: id.clone(),
                    version: entry.version,
                    tree,
                    network: Arc::new(network),
                    rejections: Arc::new(rejections),
                }),
            );
        }
        Ok(Store { dir: Some(dir), next_id: index.next_id, plans })
    }

    pub fn len(&self) -> usize {
        self.plans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.plans.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<Arc<Snapshot>> {
        self.plans.get(id).cloned()
    }

    fn write_index(&self) -> Result<(), StoreError> {
        let Some(dir) = &self.dir else { return Ok(()) };
        let index = Index {
            next_id: self.next_id,
            plans: self.plans.iter().map(|(id, s)| (id.clone(), IndexEntry { version: s.version })).collect(),
        };
        let text = serde_json::to_string_pretty(&index).expect("index serializes") + "\n";
        write_atomic(&dir.join("index.json"), &text)
    }

    fn write_tree(&self, snapshot: &Snapshot) -> Result<(), StoreError> {
        let Some(dir) = &self.dir else { return Ok(()) };
        let base = dir.join("plans").join(&snapshot.id);
        write_atomic(&base.join(format!("tree_v{}.json", snapshot.version)), &(tree_to_json_pretty(&snapshot.tree) + "\n"))
    }

    /// Store a new plan at version 1.
    pub fn create(&mut self, tree: TaskTree, network: UnifiedNetwork, rejections: RejectionLog) -> Result<Arc<Snapshot>, StoreError> {
        self.next_id += 1;
        let id = format!("plan-{}", self.next_id);
        let snapshot = Arc::new(Snapshot {
            id: id.clone(),
            version: 1,
            tree,
            network: Arc::new(network),
            rejections: Arc::new(rejections),
        });
        if let Some(dir) = &self.dir {
            let base = dir.join("plans").join(&id);
            std::fs::create_dir_all(&base).map_err(|e| io(&base, e))?;
            write_atomic(&base.join("network.json"), &(snapshot.network.to_json_pretty() + "\n"))?;
            write_atomic(&base.join("rejections.json"), &(snapshot.rejections.to_json_pretty() + "\n"))?;
            self.write_tree(&snapshot)?;
        }
        self.plans.insert(id, snapshot.clone());
        if let Err(e) = self.write_index() {
            self.plans.remove(&snapshot.id);
            return Err(e);
        }
        Ok(snapshot)
    }

    /// Replace the tree of `current`, bumping the version. Nothing changes in
    /// memory unless the new version reached disk.
    pub fn commit(&mut self, current: &Snapshot, tree: TaskTree) -> Result<Arc<Snapshot>, StoreError> {
        let next = Arc::new(Snapshot { version: current.version + 1, tree, ..current.clone() });
        self.write_tree(&next)?;
        let previous = self.plans.insert(next.id.clone(), next.clone());
        if let Err(e) = self.write_index() {
            if let Some(previous) = previous {
                self.plans.insert(previous.id.clone(), previous);
            }
            return Err(e);
        }
        Ok(next)
    }
}
