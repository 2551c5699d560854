//! Two-stage task-tree generation: itemized instructions first, then a
//! translation of those instructions into functional units.
//!
//! Replies come from a [`Backend`]. [`FixtureBackend`] replays recorded files
//! and is what tests and offline runs use; [`LiveBackend`] talks to a
//! chat-completion endpoint and can record what it receives. This crate is
//! the only one that performs network I/O.

mod backend;
mod extract;
mod prompt;

use thiserror::Error;
use treeplan_core::{parse_task_tree, InterchangeError, TaskTree};

pub use backend::{demand_key, normalize_demand, Backend, FixtureBackend, LiveBackend, LiveConfig, Stage};
pub use extract::{extract_json, parse_steps};
pub use prompt::PromptTemplate;

pub const DEFAULT_N_TREES: usize = 5;

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("malformed response ({reason}): {body}")]
    MalformedResponse { reason: String, body: String },
    #[error("no instruction steps to translate")]
    EmptySteps,
    #[error("n_trees must be at least 1")]
    InvalidRequest,
    #[error("generated tree does not parse: {0}")]
    Parse(#[from] InterchangeError),
    #[error("cannot archive response: {0}")]
    Archive(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenerationRequest {
    pub demand: String,
    pub n_trees: usize,
}

impl GenerationRequest {
    pub fn new(demand: &str) -> Self {
        GenerationRequest { demand: demand.to_string(), n_trees: DEFAULT_N_TREES }
    }

    pub fn with_trees(mut self, n_trees: usize) -> Self {
        self.n_trees = n_trees;
        self
    }
}

pub struct Gateway<B> {
    backend: B,
    template: PromptTemplate,
}

impl<B: Backend> Gateway<B> {
    pub fn new(backend: B, template: PromptTemplate) -> Self {
        Gateway { backend, template }
    }

    pub fn template(&self) -> &PromptTemplate {
        &self.template
    }

    /// One step list per requested tree. Generations run concurrently and
    /// come back in request order; the first failure in that order wins.
    pub fn generate_instructions(&self, request: &GenerationRequest) -> Result<Vec<Vec<String>>, GatewayError> {
        if request.n_trees == 0 {
            return Err(GatewayError::InvalidRequest);
        }
        let prompt = self.template.render_instructions(&request.demand);
        fan_out(request.n_trees, |index| {
            let reply = self.backend.complete(Stage::Instructions, &request.demand, index, &prompt)?;
            let steps = parse_steps(&reply);
            if steps.is_empty() {
                return Err(GatewayError::MalformedResponse { reason: "no steps".into(), body: reply });
            }
            Ok(steps)
        })
    }

    /// Translate the `index`-th step list into a tree. Units are parsed but
    /// not validated.
    pub fn instructions_to_tree(&self, demand: &str, index: usize, steps: &[String]) -> Result<TaskTree, GatewayError> {
        if steps.is_empty() {
            return Err(GatewayError::EmptySteps);
        }
        let prompt = self.template.render_tree(demand, steps);
        let reply = self.backend.complete(Stage::Tree, demand, index, &prompt)?;
        let Some(json) = extract_json(&reply) else {
            return Err(GatewayError::MalformedResponse { reason: "no JSON object".into(), body: reply });
        };
        Ok(parse_task_tree(json)?)
    }

    /// Both stages for every requested tree.
    pub fn generate_trees(&self, request: &GenerationRequest) -> Result<Vec<TaskTree>, GatewayError> {
        let instructions = self.generate_instructions(request)?;
        fan_out(instructions.len(), |index| self.instructions_to_tree(&request.demand, index, &instructions[index]))
    }
}

fn fan_out<T: Send>(
    n: usize,
    job: impl Fn(usize) -> Result<T, GatewayError> + Sync,
) -> Result<Vec<T>, GatewayError> {
    let job = &job;
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..n).map(|index| scope.spawn(move || job(index))).collect();
        handles.into_iter().map(|h| h.join().expect("generation thread panicked")).collect()
    })
}
