//! Grounded breadth-first forward search.
//!
//! Actions are grounded over the typed objects, with groundings whose static
//! preconditions (predicates no action changes) fail in the initial state
//! dropped up front. States are bitsets over the ground atoms that occur.
//! Successors apply deletes before adds. Breadth-first order with duplicate
//! detection makes the first plan found a shortest one.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ast::{Atom, Domain, Literal, Problem};
use crate::validate::{validate_domain, validate_problem, ValidationError};

pub const DEFAULT_NODE_LIMIT: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    /// Maximum number of distinct states stored before giving up.
    pub max_nodes: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_nodes: DEFAULT_NODE_LIMIT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Step {
    pub action: String,
    pub args: Vec<String>,
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.action)?;
        for arg in &self.args {
            write!(f, " {arg}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Plan {
    pub steps: Vec<Step>,
}

impl Plan {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error(transparent)]
    Invalid(#[from] ValidationError),
    #[error("search stored {nodes} states without reaching the goal")]
    ResourceLimit { nodes: usize },
    #[error("goal is unreachable from the initial state")]
    Unsolvable,
}

struct Facts {
    index: HashMap<Atom, usize>,
}

impl Facts {
    fn id(&mut self, atom: Atom) -> usize {
        let next = self.index.len();
        *self.index.entry(atom).or_insert(next)
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct State(Vec<u64>);

impl State {
    fn empty(bits: usize) -> Self {
        State(vec![0; bits.div_ceil(64).max(1)])
    }

    fn has(&self, bit: usize) -> bool {
        self.0[bit / 64] & (1 << (bit % 64)) != 0
    }

    fn set(&mut self, bit: usize, on: bool) {
        if on {
            self.0[bit / 64] |= 1 << (bit % 64);
        } else {
            self.0[bit / 64] &= !(1 << (bit % 64));
        }
    }
}

struct GroundAction {
    step: Step,
    pre_pos: Vec<usize>,
    pre_neg: Vec<usize>,
    add: Vec<usize>,
    delete: Vec<usize>,
}

fn substitute(atom: &Atom, binding: &HashMap<&str, &str>) -> Atom {
    Atom {
        predicate: atom.predicate.clone(),
        args: atom
            .args
            .iter()
            .map(|a| binding.get(a.as_str()).map_or_else(|| a.clone(), |v| v.to_string()))
            .collect(),
    }
}

/// Objects (including domain constants) usable for each parameter type, in
/// declaration order.
fn candidates<'a>(domain: &'a Domain, problem: &'a Problem, ty: &str) -> Vec<&'a str> {
    problem
        .objects
        .iter()
        .chain(&domain.constants)
        .filter(|o| domain.is_subtype(o.type_name(), ty))
        .map(|o| o.name.as_str())
        .collect()
}

fn ground(domain: &Domain, problem: &Problem, facts: &mut Facts) -> Vec<GroundAction> {
    let changing: BTreeSet<&str> = domain
        .actions
        .iter()
        .flat_map(|a| a.add.iter().chain(&a.delete))
        .map(|atom| atom.predicate.as_str())
        .collect();
    let init: BTreeSet<&Atom> = problem.init.iter().collect();
    let mut grounded = Vec::new();
    for action in &domain.actions {
        let pools: Vec<Vec<&str>> = action
            .parameters
            .iter()
            .map(|p| candidates(domain, problem, p.type_name()))
            .collect();
        if pools.iter().any(Vec::is_empty) {
            continue;
        }
        let mut cursor = vec![0usize; pools.len()];
        'assignments: loop {
            let binding: HashMap<&str, &str> = action
                .parameters
                .iter()
                .zip(&cursor)
                .enumerate()
                .map(|(i, (p, &c))| (p.name.as_str(), pools[i][c]))
                .collect();
            let statics_hold = action.precondition.iter().all(|lit| {
                if changing.contains(lit.atom.predicate.as_str()) {
                    return true;
                }
                init.contains(&substitute(&lit.atom, &binding)) == lit.positive
            });
            if statics_hold {
                let mut ga = GroundAction {
                    step: Step {
                        action: action.name.clone(),
                        args: action.parameters.iter().map(|p| binding[p.name.as_str()].to_string()).collect(),
                    },
                    pre_pos: Vec::new(),
                    pre_neg: Vec::new(),
                    add: Vec::new(),
                    delete: Vec::new(),
                };
                for lit in &action.precondition {
                    let id = facts.id(substitute(&lit.atom, &binding));
                    if lit.positive {
                        ga.pre_pos.push(id);
                    } else {
                        ga.pre_neg.push(id);
                    }
                }
                ga.add = action.add.iter().map(|a| facts.id(substitute(a, &binding))).collect();
                ga.delete = action.delete.iter().map(|a| facts.id(substitute(a, &binding))).collect();
                grounded.push(ga);
            }
            for i in (0..cursor.len()).rev() {
                cursor[i] += 1;
                if cursor[i] < pools[i].len() {
                    continue 'assignments;
                }
                cursor[i] = 0;
            }
            break;
        }
    }
    grounded
}

fn holds(state: &State, pos: &[usize], neg: &[usize]) -> bool {
    pos.iter().all(|&b| state.has(b)) && neg.iter().all(|&b| !state.has(b))
}

/// Find a shortest plan, after validating both documents.
pub fn solve(domain: &Domain, problem: &Problem, limits: Limits) -> Result<Plan, SolveError> {
    validate_domain(domain)?;
    validate_problem(domain, problem)?;
    let mut facts = Facts { index: HashMap::new() };
    let init_ids: Vec<usize> = problem.init.iter().map(|a| facts.id(a.clone())).collect();
    let (mut goal_pos, mut goal_neg) = (Vec::new(), Vec::new());
    for Literal { atom, positive } in &problem.goal {
        let id = facts.id(atom.clone());
        if *positive {
            goal_pos.push(id);
        } else {
            goal_neg.push(id);
        }
    }
    let actions = ground(domain, problem, &mut facts);
    let bits = facts.index.len();
    let mut start = State::empty(bits);
    for id in init_ids {
        start.set(id, true);
    }
    if holds(&start, &goal_pos, &goal_neg) {
        return Ok(Plan::default());
    }
    // Each stored state remembers its parent and the action that reached it.
    let mut states: Vec<(State, usize, usize)> = vec![(start.clone(), usize::MAX, usize::MAX)];
    let mut seen: HashSet<State> = HashSet::from([start]);
    let mut queue = VecDeque::from([0usize]);
    while let Some(current) = queue.pop_front() {
        for (ai, action) in actions.iter().enumerate() {
            let state = &states[current].0;
            if !holds(state, &action.pre_pos, &action.pre_neg) {
                continue;
            }
            let mut next = state.clone();
            for &d in &action.delete {
                next.set(d, false);
            }
            for &a in &action.add {
                next.set(a, true);
            }
            if seen.contains(&next) {
                continue;
            }
            let reached = holds(&next, &goal_pos, &goal_neg);
            seen.insert(next.clone());
            states.push((next, current, ai));
            if reached {
                let mut steps = Vec::new();
                let mut at = states.len() - 1;
                while states[at].1 != usize::MAX {
                    steps.push(actions[states[at].2].step.clone());
                    at = states[at].1;
                }
                steps.reverse();
                return Ok(Plan { steps });
            }
            if states.len() > limits.max_nodes {
                return Err(SolveError::ResourceLimit { nodes: states.len() });
            }
            queue.push_back(states.len() - 1);
        }
    }
    Err(SolveError::Unsolvable)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimulationError {
    #[error("step {index}: unknown action `{action}`")]
    UnknownAction { index: usize, action: String },
    #[error("step {index}: `{action}` expects {expected} arguments")]
    Arity {
        index: usize,
        action: String,
        expected: usize,
    },
    #[error("step {index}: `{arg}` is not an object of type {ty}")]
    BadArgument { index: usize, arg: String, ty: String },
    #[error("step {index}: precondition {literal} does not hold")]
    Precondition { index: usize, literal: String },
    #[error("goal {literal} does not hold after the plan")]
    Goal { literal: String },
}

/// Replay `plan` from the initial state over plain atom sets and return the
/// final state. Shares no code with the search.
pub fn simulate(domain: &Domain, problem: &Problem, plan: &Plan) -> Result<BTreeSet<Atom>, SimulationError> {
    let mut state: BTreeSet<Atom> = problem.init.iter().cloned().collect();
    let object_type = |name: &str| {
        problem
            .objects
            .iter()
            .chain(&domain.constants)
            .find(|o| o.name == name)
            .map(|o| o.type_name().to_string())
    };
    for (index, step) in plan.steps.iter().enumerate() {
        let action = domain.action(&step.action).ok_or_else(|| SimulationError::UnknownAction {
            index,
            action: step.action.clone(),
        })?;
        if action.parameters.len() != step.args.len() {
            return Err(SimulationError::Arity {
                index,
                action: step.action.clone(),
                expected: action.parameters.len(),
            });
        }
        let mut binding = HashMap::new();
        for (param, arg) in action.parameters.iter().zip(&step.args) {
            let ok = object_type(arg).is_some_and(|ty| domain.is_subtype(&ty, param.type_name()));
            if !ok {
                return Err(SimulationError::BadArgument {
                    index,
                    arg: arg.clone(),
                    ty: param.type_name().to_string(),
                });
            }
            binding.insert(param.name.as_str(), arg.as_str());
        }
        for literal in &action.precondition {
            let ground = substitute(&literal.atom, &binding);
            if state.contains(&ground) != literal.positive {
                return Err(SimulationError::Precondition {
                    index,
                    literal: Literal {
                        atom: ground,
                        positive: literal.positive,
                    }
                    .to_string(),
                });
            }
        }
        for atom in &action.delete {
            state.remove(&substitute(atom, &binding));
        }
        for atom in &action.add {
            state.insert(substitute(atom, &binding));
        }
    }
    Ok(state)
}

/// Replay the plan and check the goal at the end.
pub fn check_plan(domain: &Domain, problem: &Problem, plan: &Plan) -> Result<BTreeSet<Atom>, SimulationError> {
    let state = simulate(domain, problem, plan)?;
    if let Some(missed) = problem.goal.iter().find(|l| state.contains(&l.atom) != l.positive) {
        return Err(SimulationError::Goal {
            literal: missed.to_string(),
        });
    }
    Ok(state)
}

/// Whether every step is applicable in turn and the plan ends in a goal state.
pub fn validate_plan(domain: &Domain, problem: &Problem, plan: &Plan) -> bool {
    check_plan(domain, problem, plan).is_ok()
}
