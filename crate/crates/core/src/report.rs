//! Validation findings.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Finding {
    MissingInput,
    MissingOutput,
    MotionCount { count: usize },
    ObjectWithoutState { object: String },
    IllegalTransition {
        object: String,
        from: String,
        to: String,
    },
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Finding::MissingInput => f.write_str("missing-input"),
            Finding::MissingOutput => f.write_str("missing-output"),
            Finding::MotionCount { count } => write!(f, "motion-count({count})"),
            Finding::ObjectWithoutState { object } => write!(f, "object-without-state({object})"),
            Finding::IllegalTransition { object, from, to } => {
                write!(f, "illegal-transition({object}, {from}, {to})")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn push(&mut self, finding: Finding) {
        self.findings.push(finding);
    }

    pub fn extend(&mut self, other: ValidationReport) {
        self.findings.extend(other.findings);
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.findings.iter().map(ToString::to_string).collect();
        write!(f, "[{}]", parts.join(", "))
    }
}
