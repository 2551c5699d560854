//! Engine inputs shared by every entry point: cost model, transition table,
//! skill catalog and an optional knowledge network.

use std::path::{Path, PathBuf};

use treeplan_core::{parse_unit_collection, ExactCostModel, FunctionalUnit, TaskTree, TransitionTable};
use treeplan_llm::extract_json;
use treeplan_pddl::{Limits, SkillCatalog};

use crate::PipelineError;

const DEFAULT_COSTS: &str = include_str!("../../../data/costs.json");
const DEFAULT_TRANSITIONS: &str = include_str!("../../../data/transitions.txt");

#[derive(Debug, Clone)]
pub struct Settings {
    pub costs: ExactCostModel,
    pub table: TransitionTable,
    pub catalog: SkillCatalog,
    /// Units imported with provenance `foon` into every merged network.
    pub foon: Vec<FunctionalUnit>,
    pub limits: Limits,
}

impl Settings {
    /// The bundled cost file, transition table and skill catalog.
    pub fn builtin() -> Self {
        Settings {
            costs: ExactCostModel::from_json(DEFAULT_COSTS).expect("bundled cost file is valid"),
            table: TransitionTable::parse(DEFAULT_TRANSITIONS).expect("bundled transition table is valid"),
            catalog: SkillCatalog::builtin(),
            foon: Vec::new(),
            limits: Limits::default(),
        }
    }

    pub fn with_costs_file(mut self, path: &Path) -> Result<Self, PipelineError> {
        let text = read(path)?;
        self.costs = ExactCostModel::from_json(&text).map_err(|e| input(path, e))?;
        Ok(self)
    }

    pub fn with_transitions_file(mut self, path: &Path) -> Result<Self, PipelineError> {
        self.table = TransitionTable::parse(&read(path)?).map_err(|e| input(path, e))?;
        Ok(self)
    }

    pub fn with_catalog_file(mut self, path: &Path) -> Result<Self, PipelineError> {
        self.catalog = SkillCatalog::load(path).map_err(|e| input(path, e))?;
        Ok(self)
    }

    pub fn with_foon(mut self, path: &Path) -> Result<Self, PipelineError> {
        self.foon = load_units(path)?;
        Ok(self)
    }
}

fn input(path: &Path, error: impl std::fmt::Display) -> PipelineError {
    PipelineError::Input(format!("{}: {error}", path.display()))
}

pub fn read(path: &Path) -> Result<String, PipelineError> {
    std::fs::read_to_string(path).map_err(|e| input(path, e))
}

/// `*.json` files of a directory in name order, or the path itself.
pub fn json_files(path: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    if !path.is_dir() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(path)
        .map_err(|e| input(path, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
        .collect();
    files.sort();
    Ok(files)
}

/// Units from a collection file or from every file of a directory.
pub fn load_units(path: &Path) -> Result<Vec<FunctionalUnit>, PipelineError> {
    let mut units = Vec::new();
    for file in json_files(path)? {
        units.extend(parse_unit_collection(&read(&file)?).map_err(|e| input(&file, e))?);
    }
    Ok(units)
}

/// A tree file. Replies recorded from a model may wrap the JSON in prose or
/// a code fence; the object is extracted first.
pub fn load_tree(path: &Path) -> Result<TaskTree, PipelineError> {
    let text = read(path)?;
    let json = extract_json(&text).unwrap_or(&text);
    treeplan_core::parse_task_tree(json).map_err(|e| input(path, e))
}
