//! Random small STRIPS problems and an exhaustive iterative-deepening
//! search for the shortest plan length.

use std::collections::{BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use treeplan_pddl::{Action, Atom, Domain, Literal, PredicateDecl, Problem, TypedName};

pub const MAX_DEPTH: usize = 5;

pub fn random_problem(seed: u64) -> (Domain, Problem) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let typed = rng.gen_bool(0.5);
    let types = if typed { vec!["block".to_string(), "slot".to_string()] } else { vec!["object".to_string()] };
    let pick_type = |rng: &mut ChaCha8Rng| types[rng.gen_range(0..types.len())].clone();
    let predicates: Vec<PredicateDecl> = (0..rng.gen_range(1..=4))
        .map(|i| PredicateDecl {
            name: format!("p{i}"),
            params: (0..rng.gen_range(0..=2))
                .map(|j| TypedName::new(&format!("?a{j}"), Some(&pick_type(&mut rng))))
                .collect(),
        })
        .collect();
    let objects: Vec<TypedName> = (0..rng.gen_range(1..=4))
        .map(|i| TypedName::new(&format!("o{i}"), Some(&pick_type(&mut rng))))
        .collect();
    let mut actions = Vec::new();
    for i in 0..rng.gen_range(1..=3) {
        let parameters: Vec<TypedName> = (0..rng.gen_range(0..=2))
            .map(|j| TypedName::new(&format!("?x{j}"), Some(&pick_type(&mut rng))))
            .collect();
        let atom_over = |rng: &mut ChaCha8Rng, terms: &[TypedName]| -> Option<Atom> {
            let decl = &predicates[rng.gen_range(0..predicates.len())];
            let mut args = Vec::new();
            for param in &decl.params {
                let fits: Vec<&TypedName> = terms.iter().filter(|t| t.ty == param.ty).collect();
                if fits.is_empty() {
                    return None;
                }
                args.push(fits[rng.gen_range(0..fits.len())].name.clone());
            }
            Some(Atom::new(&decl.name, args))
        };
        let mut precondition = Vec::new();
        for _ in 0..rng.gen_range(0..=2) {
            if let Some(atom) = atom_over(&mut rng, &parameters) {
                precondition.push(Literal { atom, positive: rng.gen_bool(0.7) });
            }
        }
        let (mut add, mut delete) = (Vec::new(), Vec::new());
        for _ in 0..rng.gen_range(1..=3) {
            if let Some(atom) = atom_over(&mut rng, &parameters) {
                if add.contains(&atom) || delete.contains(&atom) {
                    continue;
                }
                if rng.gen_bool(0.6) {
                    add.push(atom);
                } else {
                    delete.push(atom);
                }
            }
        }
        actions.push(Action { name: format!("act{i}"), parameters, precondition, add, delete });
    }
    let domain = Domain {
        name: "fuzz".into(),
        requirements: vec![":strips".into(), ":typing".into(), ":negative-preconditions".into()],
        types: if typed { types.iter().map(|t| TypedName::new(t, None)).collect() } else { Vec::new() },
        constants: Vec::new(),
        predicates: predicates.clone(),
        actions,
    };
    let added: Vec<&str> = domain.actions.iter().flat_map(|a| &a.add).map(|a| a.predicate.as_str()).collect();
    let ground_atom = |rng: &mut ChaCha8Rng, prefer_added: bool| -> Option<Atom> {
        let decl = if prefer_added && !added.is_empty() {
            let name = added[rng.gen_range(0..added.len())];
            predicates.iter().find(|p| p.name == name).unwrap()
        } else {
            &predicates[rng.gen_range(0..predicates.len())]
        };
        let mut args = Vec::new();
        for param in &decl.params {
            let fits: Vec<&TypedName> = objects.iter().filter(|o| o.ty == param.ty).collect();
            if fits.is_empty() {
                return None;
            }
            args.push(fits[rng.gen_range(0..fits.len())].name.clone());
        }
        Some(Atom::new(&decl.name, args))
    };
    let mut init = BTreeSet::new();
    for _ in 0..rng.gen_range(0..=4) {
        init.extend(ground_atom(&mut rng, false));
    }
    let mut goal = Vec::new();
    for _ in 0..rng.gen_range(1..=2) {
        let prefer_added = rng.gen_bool(0.8);
        if let Some(atom) = ground_atom(&mut rng, prefer_added) {
            let literal = Literal { atom, positive: rng.gen_bool(0.8) };
            if !goal.iter().any(|g: &Literal| g.atom == literal.atom) {
                goal.push(literal);
            }
        }
    }
    let problem = Problem { name: "p".into(), domain: "fuzz".into(), objects, init: init.into_iter().collect(), goal };
    (domain, problem)
}

pub type Facts = BTreeSet<(String, Vec<String>)>;

/// Ground every action by brute force over typed objects.
pub fn ground_all(domain: &Domain, problem: &Problem) -> Vec<(Vec<(Facts, bool)>, Facts, Facts)> {
    let mut out = Vec::new();
    for action in &domain.actions {
        let n = action.parameters.len();
        let pools: Vec<Vec<&str>> = action
            .parameters
            .iter()
            .map(|p| problem.objects.iter().filter(|o| o.ty == p.ty).map(|o| o.name.as_str()).collect())
            .collect();
        let total: usize = pools.iter().map(Vec::len).product();
        for mut k in 0..total {
            let mut binding: HashMap<&str, &str> = HashMap::new();
            for i in (0..n).rev() {
                binding.insert(&action.parameters[i].name, pools[i][k % pools[i].len()]);
                k /= pools[i].len();
            }
            let g = |a: &Atom| (a.predicate.clone(), a.args.iter().map(|x| binding.get(x.as_str()).unwrap_or(&x.as_str()).to_string()).collect::<Vec<_>>());
            let pre = action.precondition.iter().map(|l| (Facts::from([g(&l.atom)]), l.positive)).collect();
            out.push((pre, action.add.iter().map(g).collect(), action.delete.iter().map(g).collect()));
        }
    }
    out
}

pub fn goal_holds(state: &Facts, goal: &[Literal]) -> bool {
    goal.iter().all(|l| state.contains(&(l.atom.predicate.clone(), l.atom.args.clone())) == l.positive)
}

/// Depth-limited DFS with a table of the largest remaining depth already
/// explored from each state.
pub fn reachable_within(
    state: &Facts,
    depth: usize,
    actions: &[(Vec<(Facts, bool)>, Facts, Facts)],
    goal: &[Literal],
    memo: &mut HashMap<Facts, usize>,
) -> bool {
    if goal_holds(state, goal) {
        return true;
    }
    if depth == 0 || memo.get(state).is_some_and(|&d| d >= depth) {
        return false;
    }
    memo.insert(state.clone(), depth);
    for (pre, add, del) in actions {
        let applicable = pre.iter().all(|(atom, positive)| atom.is_subset(state) == *positive);
        if !applicable {
            continue;
        }
        let mut next: Facts = state.difference(del).cloned().collect();
        next.extend(add.iter().cloned());
        if reachable_within(&next, depth - 1, actions, goal, memo) {
            return true;
        }
    }
    false
}

pub fn shortest_by_iterative_deepening(domain: &Domain, problem: &Problem) -> Option<usize> {
    let actions = ground_all(domain, problem);
    let init: Facts = problem.init.iter().map(|a| (a.predicate.clone(), a.args.clone())).collect();
    (0..=MAX_DEPTH).find(|&depth| reachable_within(&init, depth, &actions, &problem.goal, &mut HashMap::new()))
}
