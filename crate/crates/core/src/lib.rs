//! Task-tree planning core.
//!
//! Functional units and task trees, their JSON interchange, structural and
//! state-transition validation, consolidation of many trees into one
//! deduplicated network, cost-aware tree retrieval, and per-object progress
//! lines with structured corrections.
//!
//! Cost arithmetic is generic over [`Scalar`]; [`Exact`] (rational) and `f64`
//! are the two instantiations used by the tools.

pub mod canonical;
pub mod interchange;
pub mod model;
pub mod network;
pub mod progress;
pub mod report;
pub mod retrieval;
pub mod scalar;
pub mod syntax;
pub mod transitions;

pub use canonical::canonical_form;
pub use interchange::{
    parse_functional_unit, parse_task_tree, parse_unit_collection, InterchangeError,
};
pub use model::{FunctionalUnit, ModelError, MotionNode, ObjectKey, ObjectNode, TaskTree, UnitId};
pub use network::{
    import_foon, merge, singularize, RejectionLog, Source, UnifiedNetwork,
};
pub use progress::{
    apply_correction, reconstruct, to_progress_lines, Correction, CorrectionError, ProgressLine, ProgressLines,
};
pub use report::{Finding, ValidationReport};
pub use retrieval::{
    retrieve_all, retrieve_optimal, tree_cost, CostModel, RetrievalError, RetrievalQuery,
};
pub use scalar::Scalar;
pub use syntax::check_syntax;
pub use transitions::{check_transitions, is_valid_unit, TransitionTable};

/// Exact rational cost scalar.
pub type Exact = num_rational::Ratio<i64>;

/// Cost model over binary floating point.
pub type CostModelF64 = CostModel<f64>;

/// Cost model over exact rationals; sums of decimal costs compare exactly.
pub type ExactCostModel = CostModel<Exact>;
