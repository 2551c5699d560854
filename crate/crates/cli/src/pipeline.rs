//! generate → merge → retrieve → progress lines → compile → solve, and the
//! artifact directory that records a run.

use std::collections::BTreeSet;
use std::path::Path;

use serde::Serialize;
use serde_json::json;
use thiserror::Error;
use treeplan_core::interchange::tree_to_json_pretty;
use treeplan_core::network::{consolidate_object_node, consolidate_tree, import_units};
use treeplan_core::{
    merge, retrieve_optimal, to_progress_lines, tree_cost, Exact, ObjectNode, ProgressLines, RejectionLog,
    RetrievalError, RetrievalQuery, TaskTree, UnifiedNetwork,
};
use treeplan_llm::{Backend, Gateway, GatewayError, GenerationRequest};
use treeplan_pddl::{compile_tree, export_external, CompiledStep, TreeCompileError};

use crate::settings::Settings;

/// Errors by pipeline stage. Each stage has its own process exit code.
#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("input: {0}")]
    Input(String),
    #[error("generate: {0}")]
    Generate(#[from] GatewayError),
    #[error("merge: {0}")]
    Merge(String),
    #[error("retrieve: {0}")]
    Retrieve(#[from] RetrievalError),
    #[error("compile: {0}")]
    Compile(#[from] TreeCompileError),
    #[error("output: {0}")]
    Output(String),
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Input(_) => 3,
            PipelineError::Generate(_) => 4,
            PipelineError::Merge(_) => 5,
            PipelineError::Retrieve(_) => 6,
            PipelineError::Compile(_) => 7,
            PipelineError::Output(_) => 8,
        }
    }
}

/// Merge the trees, then absorb the knowledge network units.
pub fn build_network(trees: &[TaskTree], settings: &Settings) -> (UnifiedNetwork, RejectionLog) {
    let (network, mut log) = merge(trees, &settings.table);
    if settings.foon.is_empty() {
        return (network, log);
    }
    let (grown, foon_log) = import_units(&settings.foon, &network, &settings.table);
    log.extend(foon_log);
    (grown, log)
}

/// The goal of the first tree, with the leaves of every tree as the
/// available inventory. Labels are consolidated the same way the network's
/// are.
pub fn query_for(trees: &[TaskTree]) -> Result<RetrievalQuery, PipelineError> {
    let first = trees.first().ok_or_else(|| PipelineError::Merge("no trees to merge".into()))?;
    let available: BTreeSet<ObjectNode> = trees.iter().flat_map(|t| consolidate_tree(t).leaves()).collect();
    Ok(RetrievalQuery::new(consolidate_object_node(&first.goal), available.into_iter().collect()))
}

/// Everything decided before compilation.
#[derive(Debug, Clone)]
pub struct Planned {
    pub network: UnifiedNetwork,
    pub rejections: RejectionLog,
    pub tree: TaskTree,
    pub cost: Exact,
    pub lines: ProgressLines,
}

pub fn plan_trees(trees: &[TaskTree], settings: &Settings) -> Result<Planned, PipelineError> {
    let query = query_for(trees)?;
    let (network, rejections) = build_network(trees, settings);
    if network.is_empty() {
        return Err(PipelineError::Merge(format!("every unit was rejected ({} rejections)", rejections.len())));
    }
    let (tree, cost) = retrieve_optimal(&network, &query, &settings.costs)?;
    let lines = to_progress_lines(&tree);
    Ok(Planned { network, rejections, tree, cost, lines })
}

pub fn generate<B: Backend>(gateway: &Gateway<B>, request: &GenerationRequest) -> Result<Vec<TaskTree>, PipelineError> {
    Ok(gateway.generate_trees(request)?)
}

pub fn compile(tree: &TaskTree, settings: &Settings) -> Result<Vec<CompiledStep>, PipelineError> {
    Ok(compile_tree(tree, &settings.catalog, settings.limits)?)
}

/// Exact decimal text when the denominator divides a power of ten, `p/q`
/// otherwise.
pub fn format_cost(cost: &Exact) -> String {
    let (mut n, d) = (i128::from(*cost.numer()), i128::from(*cost.denom()));
    let (mut twos, mut fives, mut rest) = (0u32, 0u32, d);
    while rest % 2 == 0 {
        rest /= 2;
        twos += 1;
    }
    while rest % 5 == 0 {
        rest /= 5;
        fives += 1;
    }
    if rest != 1 {
        return format!("{}/{}", cost.numer(), cost.denom());
    }
    let digits = twos.max(fives);
    n *= 10i128.pow(digits) / d;
    let negative = n < 0;
    let text = n.abs().to_string();
    let text = if digits == 0 {
        text
    } else {
        let padded = format!("{text:0>width$}", width = digits as usize + 1);
        let (int, frac) = padded.split_at(padded.len() - digits as usize);
        format!("{int}.{frac}")
    };
    if negative { format!("-{text}") } else { text }
}

#[derive(Serialize)]
struct PlanFile<'a> {
    goal: &'a ObjectNode,
    cost: String,
    units: Vec<serde_json::Value>,
    actions: usize,
}

pub fn plan_json(planned: &Planned, steps: &[CompiledStep]) -> serde_json::Value {
    let units: Vec<serde_json::Value> = steps
        .iter()
        .map(|s| {
            json!({
                "unit_index": s.unit_index,
                "motion": planned.tree.units[s.unit_index].motion().label(),
                "actions": s.plan.steps.iter().map(ToString::to_string).collect::<Vec<_>>(),
            })
        })
        .collect();
    serde_json::to_value(PlanFile {
        goal: &planned.tree.goal,
        cost: format_cost(&planned.cost),
        actions: steps.iter().map(|s| s.plan.len()).sum(),
        units,
    })
    .expect("plan file serializes")
}

/// Write network.json, rejections.json, tree.json, lines.json,
/// pddl/step_NN/{domain,problem}.pddl and plan.json into `dir`.
pub fn write_artifacts(dir: &Path, planned: &Planned, steps: &[CompiledStep]) -> Result<(), PipelineError> {
    let out = |e: std::io::Error| PipelineError::Output(format!("{}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(out)?;
    let write = |name: &str, text: String| std::fs::write(dir.join(name), text).map_err(out);
    write("network.json", planned.network.to_json_pretty() + "\n")?;
    write("rejections.json", planned.rejections.to_json_pretty() + "\n")?;
    write("tree.json", tree_to_json_pretty(&planned.tree) + "\n")?;
    write("lines.json", pretty(&planned.lines))?;
    let pddl = dir.join("pddl");
    if pddl.exists() {
        std::fs::remove_dir_all(&pddl).map_err(out)?;
    }
    for (n, step) in steps.iter().enumerate() {
        export_external(&step.domain, &step.problem, pddl.join(format!("step_{:02}", n + 1))).map_err(out)?;
    }
    write("plan.json", pretty(&plan_json(planned, steps)))
}

pub fn pretty(value: &impl Serialize) -> String {
    serde_json::to_string_pretty(value).expect("artifact serializes") + "\n"
}

/// Merge and plan the given trees, compile the result and write every
/// artifact.
pub fn run(trees: &[TaskTree], settings: &Settings, out: &Path) -> Result<(Planned, Vec<CompiledStep>), PipelineError> {
    let planned = plan_trees(trees, settings)?;
    let steps = compile(&planned.tree, settings)?;
    write_artifacts(out, &planned, &steps)?;
    Ok((planned, steps))
}

pub fn tree_cost_of(tree: &TaskTree, settings: &Settings) -> Exact {
    tree_cost(tree, &settings.costs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact(n: i64, d: i64) -> Exact {
        Exact::new(n, d)
    }

    #[test]
    fn costs_print_as_exact_decimals() {
        assert_eq!(format_cost(&exact(1, 2)), "0.5");
        assert_eq!(format_cost(&exact(7, 10)), "0.7");
        assert_eq!(format_cost(&exact(3, 1)), "3");
        assert_eq!(format_cost(&exact(1, 40)), "0.025");
        assert_eq!(format_cost(&exact(-3, 4)), "-0.75");
        assert_eq!(format_cost(&exact(0, 1)), "0");
        assert_eq!(format_cost(&exact(1, 3)), "1/3");
    }
}
