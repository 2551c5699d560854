//! How often merging more generated trees finds a cheaper plan than the
//! first tree alone.
//!
//! For every task and every k, the trees 1..=k are merged and the optimal
//! tree retrieved. The query is fixed per task (goal of tree 1, leaves of all
//! k_max trees), so the networks are nested and the optimum can only fall as
//! k grows. The baseline is the optimum over tree 1's network rather than
//! tree 1's own cost, so k = 1 never counts as an improvement.

use std::path::{Path, PathBuf};

use serde::Serialize;
use treeplan_core::{merge, retrieve_optimal, Exact, RetrievalError};

use crate::pipeline::{format_cost, query_for, PipelineError};
use crate::settings::{load_tree, Settings};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskResult {
    pub task: String,
    /// Optimal cost for each k; `None` when no grounded tree exists.
    pub optimal: Vec<Option<String>>,
    pub improved: Vec<bool>,
    pub rejected_units: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub k: usize,
    pub tasks: usize,
    pub improved: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub k_max: usize,
    pub rows: Vec<Row>,
    pub tasks: Vec<TaskResult>,
}

impl Report {
    pub fn fractions(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.fraction).collect()
    }
}

/// Task directories: every subdirectory holding a `tree_1.json`, by name.
pub fn discover(corpus: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    let entries = std::fs::read_dir(corpus).map_err(|e| PipelineError::Input(format!("{}: {e}", corpus.display())))?;
    let mut tasks: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("tree_1.json").is_file())
        .collect();
    tasks.sort();
    Ok(tasks)
}

fn optimum(trees: &[treeplan_core::TaskTree], settings: &Settings, query: &treeplan_core::RetrievalQuery) -> Result<(Option<Exact>, usize), PipelineError> {
    let (network, log) = merge(trees, &settings.table);
    match retrieve_optimal(&network, query, &settings.costs) {
        Ok((_, cost)) => Ok((Some(cost), log.len())),
        Err(RetrievalError::GoalNotProducible { .. } | RetrievalError::NoGroundedTree { .. }) => Ok((None, log.len())),
        Err(e) => Err(e.into()),
    }
}

pub fn run_task(dir: &Path, k_max: usize, settings: &Settings) -> Result<TaskResult, PipelineError> {
    let trees = (1..=k_max)
        .map(|k| load_tree(&dir.join(format!("tree_{k}.json"))))
        .collect::<Result<Vec<_>, _>>()?;
    let query = query_for(&trees)?;
    let mut optimal = Vec::new();
    let mut rejected_units = Vec::new();
    for k in 1..=k_max {
        let (cost, rejected) = optimum(&trees[..k], settings, &query)?;
        optimal.push(cost);
        rejected_units.push(rejected);
    }
    let baseline = optimal[0];
    let improved = optimal
        .iter()
        .map(|c| matches!((baseline, c), (Some(b), Some(c)) if *c < b))
        .collect();
    Ok(TaskResult {
        task: dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
        optimal: optimal.iter().map(|c| c.as_ref().map(format_cost)).collect(),
        improved,
        rejected_units,
    })
}

pub fn run(corpus: &Path, k_max: usize, settings: &Settings) -> Result<Report, PipelineError> {
    if k_max == 0 {
        return Err(PipelineError::Input("--k-max must be at least 1".into()));
    }
    let dirs = discover(corpus)?;
    if dirs.is_empty() {
        return Err(PipelineError::Input(format!("{}: no task directories", corpus.display())));
    }
    let tasks = dirs.iter().map(|d| run_task(d, k_max, settings)).collect::<Result<Vec<_>, _>>()?;
    let rows = (1..=k_max)
        .map(|k| {
            let improved = tasks.iter().filter(|t| t.improved[k - 1]).count();
            Row { k, tasks: tasks.len(), improved, fraction: improved as f64 / tasks.len() as f64 }
        })
        .collect();
    Ok(Report { k_max, rows, tasks })
}

/// `experiment.csv` (one row per k) and `experiment.json` (series for
/// plotting plus per-task detail).
pub fn write(report: &Report, dir: &Path) -> Result<(), PipelineError> {
    let out = |e: &dyn std::fmt::Display| PipelineError::Output(format!("{}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(|e| out(&e))?;
    let mut csv = csv::Writer::from_path(dir.join("experiment.csv")).map_err(|e| out(&e))?;
    for row in &report.rows {
        csv.serialize(row).map_err(|e| out(&e))?;
    }
    csv.flush().map_err(|e| out(&e))?;
    let plot = serde_json::json!({
        "k": report.rows.iter().map(|r| r.k).collect::<Vec<_>>(),
        "fraction_improved": report.fractions(),
        "tasks": report.tasks.len(),
        "per_task": report.tasks,
    });
    std::fs::write(dir.join("experiment.json"), crate::pipeline::pretty(&plot)).map_err(|e| out(&e))
}
