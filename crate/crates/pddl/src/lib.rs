//! STRIPS-subset PDDL for task-tree execution: an AST with a canonical
//! printer, a parser, static validation, a breadth-first planner with an
//! independent plan checker, and compilation of functional units against a
//! skill catalog.

pub mod ast;
pub mod compile;
pub mod parser;
pub mod planner;
pub mod validate;

pub use ast::{Action, Atom, Document, Domain, Literal, PredicateDecl, Problem, TypedName};
pub use compile::{
    compile_tree, compile_unit, export_external, pddl_name, thread_init, CatalogError, CompileError, CompiledStep,
    SkillCatalog, TreeCompileError,
};
pub use parser::{parse_domain, parse_pddl, parse_problem, ParseError};
pub use planner::{check_plan, simulate, solve, validate_plan, Limits, Plan, SimulationError, SolveError, Step};
pub use validate::{validate_domain, validate_problem, ValidationError};
