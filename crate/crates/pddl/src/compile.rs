//! Template compilation of functional units into STRIPS problems over the
//! kitchen skill catalog.
//!
//! Object encoding, by input/output object state:
//!
//! | object fact            | atom                  |
//! |------------------------|-----------------------|
//! | container `c`          | `(in o c)`            |
//! | state `contains x`     | `(in x o)`            |
//! | state `empty`          | `(empty o)`           |
//! | state `upside down`    | `(upside-down o)`     |
//! | state `open`/`opened`  | `(opened o)`          |
//! | state `closed`         | `(closed o)`          |
//! | all other states       | `(state o tok)`, one token per object |
//!
//! An object whose token differs between inputs and outputs gets a
//! `(may-become o from to)` fact; an object not mentioned at all among the
//! inputs starts out with token `absent`, one mentioned without other states
//! with `plain`. Uncontained things start on the table and
//! the hand starts empty; the goal also requires an empty hand.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;
use treeplan_core::{FunctionalUnit, ObjectNode, TaskTree};

use crate::ast::{Action, Atom, Domain, Literal, PredicateDecl, Problem, TypedName};
use crate::parser::{parse_action_text, parse_predicate_text, ParseError};
use crate::planner::{check_plan, solve, Limits, Plan, SimulationError, SolveError};

const DEFAULT_CATALOG: &str = include_str!("../../../data/skills.json");

pub const ABSENT: &str = "absent";
pub const PLAIN: &str = "plain";

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("cannot read skill catalog: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed skill catalog: {0}")]
    Json(#[from] serde_json::Error),
    #[error("skill catalog entry does not parse: {0}")]
    Pddl(#[from] ParseError),
    #[error("macro `{motion}` uses unknown primitive `{primitive}`")]
    UnknownPrimitive { motion: String, primitive: String },
}

#[derive(Deserialize)]
struct CatalogFile {
    domain_prefix: String,
    requirements: Vec<String>,
    types: Vec<String>,
    predicates: Vec<String>,
    primitives: Vec<String>,
    macros: BTreeMap<String, Vec<String>>,
}

/// Robot skills: primitive actions and the macro each motion label expands to.
#[derive(Debug, Clone, PartialEq)]
pub struct SkillCatalog {
    domain_prefix: String,
    requirements: Vec<String>,
    types: Vec<String>,
    predicates: Vec<PredicateDecl>,
    primitives: Vec<Action>,
    macros: BTreeMap<String, Vec<String>>,
}

impl SkillCatalog {
    pub fn parse(text: &str) -> Result<Self, CatalogError> {
        let file: CatalogFile = serde_json::from_str(text)?;
        let predicates = file
            .predicates
            .iter()
            .map(|p| parse_predicate_text(p))
            .collect::<Result<Vec<_>, _>>()?;
        let primitives = file
            .primitives
            .iter()
            .map(|p| parse_action_text(p))
            .collect::<Result<Vec<_>, _>>()?;
        for (motion, steps) in &file.macros {
            if let Some(primitive) = steps.iter().find(|s| !primitives.iter().any(|p| &p.name == *s)) {
                return Err(CatalogError::UnknownPrimitive {
                    motion: motion.clone(),
                    primitive: primitive.clone(),
                });
            }
        }
        Ok(SkillCatalog {
            domain_prefix: file.domain_prefix,
            requirements: file.requirements,
            types: file.types,
            predicates,
            primitives,
            macros: file.macros,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CatalogError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// The catalog shipped in `data/skills.json`.
    pub fn builtin() -> Self {
        Self::parse(DEFAULT_CATALOG).expect("bundled skill catalog is well formed")
    }

    pub fn primitives(&self) -> &[Action] {
        &self.primitives
    }

    pub fn expansion(&self, motion: &str) -> Option<&[String]> {
        self.macros.get(motion).map(Vec::as_slice)
    }

    pub fn motions(&self) -> impl Iterator<Item = &str> {
        self.macros.keys().map(String::as_str)
    }

    /// Domain for one motion: every catalog predicate, only the primitives of
    /// the motion's macro.
    pub fn domain_for(&self, motion: &str) -> Result<Domain, CompileError> {
        let steps = self.expansion(motion).ok_or_else(|| CompileError::UnknownMotion {
            motion: motion.to_string(),
        })?;
        let mut actions: Vec<Action> = Vec::new();
        for step in steps {
            if !actions.iter().any(|a| &a.name == step) {
                let action = self
                    .primitives
                    .iter()
                    .find(|p| &p.name == step)
                    .expect("macros are checked against primitives at load");
                actions.push(action.clone());
            }
        }
        Ok(Domain {
            name: format!("{}-{}", self.domain_prefix, pddl_name(motion)),
            requirements: self.requirements.clone(),
            types: self.types.iter().map(|t| TypedName::new(t, None)).collect(),
            constants: Vec::new(),
            predicates: self.predicates.clone(),
            actions,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompileError {
    #[error("no skill for motion `{motion}`")]
    UnknownMotion { motion: String },
}

/// Lowercase, with every run of characters outside `[a-z0-9]` replaced by `-`.
pub fn pddl_name(label: &str) -> String {
    let mut out = String::new();
    for c in label.to_lowercase().chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c);
        } else if !out.is_empty() && !out.ends_with('-') {
            out.push('-');
        }
    }
    while out.ends_with('-') {
        out.pop();
    }
    if out.is_empty() || !out.starts_with(|c: char| c.is_ascii_alphabetic()) {
        out.insert_str(0, "o-");
    }
    out
}

/// Facts for one side of a unit, grouped per object label.
#[derive(Default)]
struct SideFacts {
    atoms: BTreeSet<Atom>,
    tokens: BTreeMap<String, String>,
    things: BTreeSet<String>,
    contained: BTreeSet<String>,
}

fn describe_side(objects: &[ObjectNode]) -> SideFacts {
    let mut side = SideFacts::default();
    let mut other_states: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for node in objects {
        let o = pddl_name(node.label());
        side.things.insert(o.clone());
        let rest = other_states.entry(o.clone()).or_default();
        if let Some(c) = node.container() {
            let c = pddl_name(c);
            side.things.insert(c.clone());
            side.contained.insert(o.clone());
            side.atoms.insert(Atom::new("in", [o.clone(), c]));
        }
        for state in node.states() {
            if let Some(content) = state.strip_prefix("contains ") {
                let x = pddl_name(content);
                side.things.insert(x.clone());
                side.contained.insert(x.clone());
                side.atoms.insert(Atom::new("in", [x, o.clone()]));
                continue;
            }
            let unary = match state.as_str() {
                "empty" => Some("empty"),
                "upside down" | "upside-down" => Some("upside-down"),
                "open" | "opened" => Some("opened"),
                "closed" => Some("closed"),
                _ => None,
            };
            match unary {
                Some(p) => {
                    side.atoms.insert(Atom::new(p, [o.clone()]));
                }
                None => {
                    rest.insert(pddl_name(state).replace('-', "_"));
                }
            }
        }
    }
    for (o, states) in other_states {
        if !states.is_empty() {
            side.tokens.insert(o, states.into_iter().collect::<Vec<_>>().join("-"));
        }
    }
    side
}

fn problem_name(unit: &FunctionalUnit) -> String {
    format!("{}-{}", pddl_name(unit.motion().label()), unit.id())
}

fn typed_objects(things: &BTreeSet<String>, tokens: &BTreeSet<String>) -> Vec<TypedName> {
    things
        .iter()
        .map(|t| TypedName::new(t, Some("thing")))
        .chain(tokens.iter().map(|t| TypedName::new(t, Some("state"))))
        .collect()
}

/// Compile one unit into a domain for its motion and a problem whose initial
/// state encodes the inputs and whose goal encodes the outputs.
pub fn compile_unit(unit: &FunctionalUnit, catalog: &SkillCatalog) -> Result<(Domain, Problem), CompileError> {
    let domain = catalog.domain_for(unit.motion().label())?;
    let before = describe_side(unit.inputs());
    let after = describe_side(unit.outputs());
    let input_labels: BTreeSet<String> = unit.inputs().iter().map(|n| pddl_name(n.label())).collect();

    let mut init = before.atoms.clone();
    let mut goal: BTreeSet<Atom> = after.atoms.clone();
    let mut tokens: BTreeSet<String> = BTreeSet::new();
    let tracked: BTreeSet<&String> = before.tokens.keys().chain(after.tokens.keys()).collect();
    for o in tracked {
        let from = if before.things.contains(o) {
            before.tokens.get(o).map_or(PLAIN, String::as_str)
        } else {
            ABSENT
        };
        let to = if unit.outputs().iter().any(|n| pddl_name(n.label()) == *o) {
            after.tokens.get(o).map_or(PLAIN, String::as_str)
        } else {
            from
        };
        init.insert(Atom::new("state", [o.as_str(), from]));
        goal.insert(Atom::new("state", [o.as_str(), to]));
        if from != to {
            init.insert(Atom::new("may-become", [o.as_str(), from, to]));
        }
        tokens.insert(from.to_string());
        tokens.insert(to.to_string());
    }
    // Objects that only come into being through this unit start where they
    // will end up.
    for node in unit.outputs() {
        let o = pddl_name(node.label());
        if input_labels.contains(&o) || before.things.contains(&o) {
            continue;
        }
        if let Some(c) = node.container() {
            init.insert(Atom::new("in", [o, pddl_name(c)]));
        }
    }
    let things: BTreeSet<String> = before.things.union(&after.things).cloned().collect();
    let contained: BTreeSet<String> = init.iter().filter(|a| a.predicate == "in").map(|a| a.args[0].clone()).collect();
    for t in &things {
        if !contained.contains(t) {
            init.insert(Atom::new("on-table", [t.as_str()]));
        }
    }
    init.insert(Atom::new("hand-empty", Vec::<String>::new()));
    goal.insert(Atom::new("hand-empty", Vec::<String>::new()));

    let problem = Problem {
        name: problem_name(unit),
        domain: domain.name.clone(),
        objects: typed_objects(&things, &tokens),
        init: init.into_iter().collect(),
        goal: goal.into_iter().map(Literal::pos).collect(),
    };
    Ok((domain, problem))
}

/// One compiled and solved unit of a tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompiledStep {
    pub unit_index: usize,
    pub domain: Domain,
    pub problem: Problem,
    pub plan: Plan,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeCompileError {
    #[error("unit {unit_index}: {source}")]
    Compile {
        unit_index: usize,
        #[source]
        source: CompileError,
    },
    #[error("unit {unit_index}: {source}")]
    Solve {
        unit_index: usize,
        #[source]
        source: SolveError,
    },
    #[error("unit {unit_index}: plan does not replay: {source}")]
    Replay {
        unit_index: usize,
        #[source]
        source: SimulationError,
    },
}

impl TreeCompileError {
    pub fn unit_index(&self) -> usize {
        match self {
            TreeCompileError::Compile { unit_index, .. }
            | TreeCompileError::Solve { unit_index, .. }
            | TreeCompileError::Replay { unit_index, .. } => *unit_index,
        }
    }
}

/// The world carried into the next unit: the previous final state without
/// its `may-become` facts, with the next unit's own input description taking
/// precedence. A carried `(in x c)` or `(state o t)` is dropped when the
/// unit says where `x` is or what `o`'s token is; a carried `(on-table x)` is
/// dropped when the unit puts `x` in something.
pub fn thread_init(previous: &BTreeSet<Atom>, fresh: &Problem) -> Vec<Atom> {
    let located: BTreeSet<&str> = fresh
        .init
        .iter()
        .filter(|a| a.predicate == "in")
        .map(|a| a.args[0].as_str())
        .collect();
    let stated: BTreeSet<&str> = fresh
        .init
        .iter()
        .filter(|a| a.predicate == "state")
        .map(|a| a.args[0].as_str())
        .collect();
    let mut init: BTreeSet<Atom> = previous
        .iter()
        .filter(|a| match a.predicate.as_str() {
            "may-become" => false,
            "in" | "on-table" => !located.contains(a.args[0].as_str()),
            "state" => !stated.contains(a.args[0].as_str()),
            _ => true,
        })
        .cloned()
        .collect();
    init.extend(fresh.init.iter().cloned());
    init.into_iter().collect()
}

fn objects_of(atoms: &[Atom], problem: &Problem, domain: &Domain) -> Vec<TypedName> {
    let mut things: BTreeSet<String> = BTreeSet::new();
    let mut tokens: BTreeSet<String> = BTreeSet::new();
    for o in &problem.objects {
        match o.type_name() {
            "state" => tokens.insert(o.name.clone()),
            _ => things.insert(o.name.clone()),
        };
    }
    for atom in atoms.iter().chain(problem.goal.iter().map(|l| &l.atom)) {
        let decl = domain.predicate(&atom.predicate).expect("compiled atoms use catalog predicates");
        for (arg, param) in atom.args.iter().zip(&decl.params) {
            match param.type_name() {
                "state" => tokens.insert(arg.clone()),
                _ => things.insert(arg.clone()),
            };
        }
    }
    typed_objects(&things, &tokens)
}

/// Compile and solve every unit in order, threading the world state from one
/// problem to the next.
pub fn compile_tree(tree: &TaskTree, catalog: &SkillCatalog, limits: Limits) -> Result<Vec<CompiledStep>, TreeCompileError> {
    let mut steps = Vec::with_capacity(tree.units.len());
    let mut world: Option<BTreeSet<Atom>> = None;
    for (unit_index, unit) in tree.units.iter().enumerate() {
        let (domain, mut problem) =
            compile_unit(unit, catalog).map_err(|source| TreeCompileError::Compile { unit_index, source })?;
        if let Some(previous) = &world {
            problem.init = thread_init(previous, &problem);
            problem.objects = objects_of(&problem.init, &problem, &domain);
        }
        let plan = solve(&domain, &problem, limits).map_err(|source| TreeCompileError::Solve { unit_index, source })?;
        let state =
            check_plan(&domain, &problem, &plan).map_err(|source| TreeCompileError::Replay { unit_index, source })?;
        world = Some(state);
        steps.push(CompiledStep {
            unit_index,
            domain,
            problem,
            plan,
        });
    }
    Ok(steps)
}

/// Write `domain.pddl` and `problem.pddl` into `dir`, creating it if needed.
pub fn export_external(domain: &Domain, problem: &Problem, dir: impl AsRef<Path>) -> std::io::Result<(PathBuf, PathBuf)> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let domain_path = dir.join("domain.pddl");
    let problem_path = dir.join("problem.pddl");
    std::fs::write(&domain_path, domain.to_string())?;
    std::fs::write(&problem_path, problem.to_string())?;
    Ok((domain_path, problem_path))
}
