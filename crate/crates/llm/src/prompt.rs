//! Prompt templates for the two generation stages.
//!
//! The wording is a reconstruction: published examples of this prompting
//! style show only an abbreviated prompt, so the preamble, exemplar and
//! format instructions here are our own.

use serde::{Deserialize, Serialize};

const PREAMBLE: &str = "You are a kitchen robot planner. You describe cooking tasks as \
sequences of atomic actions that a single-arm robot can execute.";

const EXEMPLAR: &str = r#"{"goal": {"label": "glass", "states": ["contains milk"]},
 "units": [
  {"inputs": [{"label": "milk", "states": ["in [bottle]"]}, {"label": "glass", "states": ["empty"]}],
   "motion": "pour",
   "outputs": [{"label": "glass", "states": ["contains milk"]}]}
 ]}"#;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub preamble: String,
    /// Example task trees in the interchange format.
    pub exemplars: Vec<String>,
    /// Motion labels the robot can execute.
    pub allowed_actions: Vec<String>,
}

impl PromptTemplate {
    pub fn new(allowed_actions: impl IntoIterator<Item = impl Into<String>>) -> Self {
        PromptTemplate {
            preamble: PREAMBLE.to_string(),
            exemplars: vec![EXEMPLAR.to_string()],
            allowed_actions: allowed_actions.into_iter().map(Into::into).collect(),
        }
    }

    fn actions_line(&self) -> String {
        format!("Allowed actions: {}.", self.allowed_actions.join(", "))
    }

    /// First stage: ask for numbered, itemized steps.
    pub fn render_instructions(&self, demand: &str) -> String {
        format!(
            "{}\n\nTask: {demand}\n{}\n\nAnswer with itemized instructions only, one step per line, \
numbered 1., 2., 3. and so on. Each step uses exactly one allowed action.",
            self.preamble,
            self.actions_line()
        )
    }

    /// Second stage: translate itemized steps into functional units.
    pub fn render_tree(&self, demand: &str, steps: &[String]) -> String {
        let numbered: Vec<String> = steps.iter().enumerate().map(|(i, s)| format!("{}. {s}", i + 1)).collect();
        let examples = self.exemplars.join("\n\n");
        format!(
            "{}\n\nTask: {demand}\nInstructions:\n{}\n{}\n\nTranslate the instructions into a task tree of \
functional units. Every unit has input objects, exactly one motion and output objects; every object has a \
label and a list of states, with locations written as \"in [container]\". Reply with a single JSON object \
of the form {{\"goal\": <object>, \"units\": [<unit>, ...]}} and nothing else.\n\nExample:\n{examples}",
            self.preamble,
            numbered.join("\n"),
            self.actions_line()
        )
    }
}
