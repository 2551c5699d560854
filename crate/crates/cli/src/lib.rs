//! Planning pipeline, experiment harness and HTTP service behind the
//! `treeplan` binary.

pub mod experiment;
pub mod pipeline;
pub mod service;
pub mod settings;
pub mod store;

pub use pipeline::PipelineError;
pub use settings::Settings;

use treeplan_llm::{Backend, Gateway, PromptTemplate};

/// Gateway whose prompts list the motions the skill catalog can compile.
pub fn gateway_for(backend: Box<dyn Backend>, settings: &Settings) -> Gateway<Box<dyn Backend>> {
    Gateway::new(backend, PromptTemplate::new(settings.catalog.motions()))
}
