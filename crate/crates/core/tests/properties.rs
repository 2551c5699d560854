//! Property tests over randomly generated networks, checked against
//! brute-force oracles that share no code with the library search.

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use treeplan_core::canonical::canonical_tree;
use treeplan_core::interchange::unit_to_json;
use treeplan_core::progress::{reconstruct, Side};
use treeplan_core::{
    apply_correction, merge, parse_functional_unit, retrieve_all, retrieve_optimal, to_progress_lines, tree_cost,
    Correction, CostModel, Exact, FunctionalUnit, ObjectNode, RetrievalError, TaskTree,
};

mod oracle;

use oracle::*;

/// Every input is available or made by an earlier unit, and the last unit
/// yields the goal.
fn executable(tree: &TaskTree, available: &[ObjectNode]) -> bool {
    let mut made: Vec<&ObjectNode> = Vec::new();
    for unit in &tree.units {
        for input in unit.inputs() {
            let ok = made.contains(&input) || available.iter().any(|a| a.satisfies(input));
            if !ok {
                return false;
            }
        }
        made.extend(unit.outputs());
    }
    tree.goal_reached()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn unit_json_round_trips(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for unit in random_units(&mut rng, 4) {
            let parsed = parse_functional_unit(&unit_to_json(&unit)).unwrap();
            prop_assert_eq!(parsed.id(), unit.id());
            prop_assert_eq!(parsed, unit);
        }
    }

    #[test]
    fn identity_ignores_object_order(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for unit in random_units(&mut rng, 4) {
            let (mut inputs, motion, mut outputs) = unit.clone().into_parts();
            inputs.shuffle(&mut rng);
            outputs.shuffle(&mut rng);
            prop_assert_eq!(FunctionalUnit::new(inputs, motion, outputs).id(), unit.id());
        }
    }

    #[test]
    fn merge_is_order_independent(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let trees: Vec<TaskTree> = (0..4)
            .map(|_| {
                let units = random_units(&mut rng, 3);
                let goal = units[2].outputs()[0].clone();
                TaskTree::new(units, goal)
            })
            .collect();
        let table = permissive_table();
        let (forward, _) = merge(&trees, &table);
        let mut reversed = trees.clone();
        reversed.reverse();
        let (backward, _) = merge(&reversed, &table);
        prop_assert_eq!(forward.unit_ids(), backward.unit_ids());
        prop_assert_eq!(forward.producers(), backward.producers());
        prop_assert_eq!(forward.consumers(), backward.consumers());
        let (producers, consumers) = forward.rebuild_indexes();
        prop_assert_eq!(&producers, forward.producers());
        prop_assert_eq!(&consumers, forward.consumers());
        for id in forward.unit_ids() {
            let a = forward.provenance(id).unwrap().sources.len();
            let b = backward.provenance(id).unwrap().sources.len();
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn optimum_matches_brute_force(seed in any::<u64>(), size in 2usize..=10) {
        let inst = instance(seed, size);
        let expected = brute_force_optimum(&inst);
        match retrieve_optimal(&inst.network, &inst.query, &inst.costs) {
            Ok((tree, cost)) => {
                prop_assert_eq!(Some(cost), expected);
                prop_assert_eq!(tree_cost(&tree, &inst.costs), cost);
                prop_assert!(executable(&tree, &inst.query.available));
            }
            Err(RetrievalError::GoalNotProducible { .. }) | Err(RetrievalError::NoGroundedTree { .. }) => {
                prop_assert_eq!(expected, None);
            }
            Err(other) => prop_assert!(false, "unexpected {other:?}"),
        }
    }

    #[test]
    fn enumerated_trees_are_executable_and_bounded_below(seed in any::<u64>(), size in 2usize..=9) {
        let inst = instance(seed, size);
        let Ok(trees) = retrieve_all(&inst.network, &inst.query) else { return Ok(()) };
        let (_, best) = retrieve_optimal(&inst.network, &inst.query, &inst.costs).unwrap();
        let mut seen = BTreeSet::new();
        let mut cheapest = None;
        for tree in &trees {
            prop_assert!(executable(tree, &inst.query.available));
            let ids: BTreeSet<_> = tree.units.iter().map(|u| u.id()).collect();
            prop_assert!(seen.insert(ids), "duplicate tree");
            let cost = tree_cost(tree, &inst.costs);
            prop_assert!(cost >= best);
            if cheapest.is_none_or(|c| cost < c) {
                cheapest = Some(cost);
            }
        }
        if trees.len() < inst.query.max_trees {
            prop_assert_eq!(cheapest, Some(best));
        }
    }

    #[test]
    fn more_trees_never_raise_the_optimum(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let table = permissive_table();
        let costs = random_costs(&mut rng);
        let base = instance(seed, 6);
        let mut trees = vec![TaskTree::new(base.units.clone(), base.query.goal.clone())];
        let mut previous: Option<Exact> = None;
        for _ in 0..4 {
            let (network, _) = merge(&trees, &table);
            let now = retrieve_optimal(&network, &base.query, &costs).ok().map(|(_, c)| c);
            if let Some(before) = previous {
                prop_assert!(now.is_some_and(|c| c <= before));
            }
            previous = now.or(previous);
            let extra = random_units(&mut rng, 3);
            let goal = extra[0].outputs()[0].clone();
            trees.push(TaskTree::new(extra, goal));
        }
    }

    #[test]
    fn scaling_costs_keeps_the_argmin(seed in any::<u64>(), num in 1i64..7, den in 1i64..7) {
        let inst = instance(seed, 8);
        let Ok((tree, cost)) = retrieve_optimal(&inst.network, &inst.query, &inst.costs) else { return Ok(()) };
        let factor = Exact::new(num, den);
        let (scaled_tree, scaled_cost) = retrieve_optimal(&inst.network, &inst.query, &inst.costs.scaled(&factor)).unwrap();
        prop_assert_eq!(canonical_tree(&scaled_tree), canonical_tree(&tree));
        prop_assert_eq!(scaled_cost, cost * factor);
    }

    #[test]
    fn float_and_exact_costs_agree(seed in any::<u64>()) {
        let inst = instance(seed, 8);
        let Ok((_, exact)) = retrieve_optimal(&inst.network, &inst.query, &inst.costs) else { return Ok(()) };
        let floats: BTreeMap<String, f64> = inst
            .costs
            .costs()
            .iter()
            .map(|(m, c)| (m.clone(), *c.numer() as f64 / *c.denom() as f64))
            .collect();
        let model = CostModel::new(floats, 0.5).unwrap();
        let (_, approx) = retrieve_optimal(&inst.network, &inst.query, &model).unwrap();
        let exact = *exact.numer() as f64 / *exact.denom() as f64;
        prop_assert!((approx - exact).abs() < 1e-9);
    }

    #[test]
    fn progress_lines_are_a_lossless_projection(seed in any::<u64>()) {
        let inst = instance(seed, 8);
        let Ok(trees) = retrieve_all(&inst.network, &inst.query) else { return Ok(()) };
        for tree in trees {
            let doc = to_progress_lines(&tree);
            prop_assert_eq!(reconstruct(&doc).unwrap(), tree.clone());
            let entries: usize = doc.lines.iter().map(|l| l.entries.len()).sum();
            let touched: usize = tree
                .units
                .iter()
                .map(|u| u.inputs().iter().chain(u.outputs()).map(|o| o.label()).collect::<BTreeSet<_>>().len())
                .sum();
            prop_assert_eq!(entries, touched);
            for line in &doc.lines {
                prop_assert!(line.entries.windows(2).all(|w| w[0].unit_index < w[1].unit_index));
            }
        }
    }

    #[test]
    fn accepted_corrections_keep_the_tree_sound(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = instance(seed, 8);
        let table = permissive_table();
        let Ok((tree, _)) = retrieve_optimal(&inst.network, &inst.query, &inst.costs) else { return Ok(()) };
        let before_links = tree.input_links();
        for _ in 0..8 {
            let unit_index = rng.gen_range(0..tree.units.len());
            let unit = &tree.units[unit_index];
            let side = if rng.gen_bool(0.5) { Side::Input } else { Side::Output };
            let pool = if side == Side::Input { unit.inputs() } else { unit.outputs() };
            let object = pool.choose(&mut rng).unwrap().label().to_string();
            let correction = match rng.gen_range(0..4) {
                0 => Correction::DeleteUnit { unit_index },
                1 => Correction::Patch {
                    object, unit_index, side: Some(side), slot: None,
                    states: Some(vec![STATES[rng.gen_range(0..STATES.len())].to_string()]),
                    container: None, clear_container: false,
                },
                2 => Correction::Patch {
                    object, unit_index, side: Some(side), slot: None, states: None,
                    container: None, clear_container: true,
                },
                _ => Correction::Patch {
                    object, unit_index, side: Some(side), slot: None, states: None,
                    container: Some(PLACES[rng.gen_range(0..PLACES.len())].to_string()), clear_container: false,
                },
            };
            let Ok(edited) = apply_correction(&tree, &correction, &table) else { continue };
            prop_assert!(edited.goal_reached());
            for unit in &edited.units {
                prop_assert!(treeplan_core::is_valid_unit(unit, &table));
            }
            if let Correction::Patch { .. } = correction {
                let after = edited.input_links();
                for (old, new) in before_links.iter().zip(&after) {
                    for (a, b) in old.iter().zip(new) {
                        prop_assert!(a.is_none() || b.is_some());
                    }
                }
            }
        }
    }
}

#[test]
fn generated_instances_exercise_the_search() {
    let mut solvable = 0;
    let mut multi_unit = 0;
    for seed in 0..200 {
        let inst = instance(seed, 8);
        if brute_force_optimum(&inst).is_some() {
            solvable += 1;
            let (tree, _) = retrieve_optimal(&inst.network, &inst.query, &inst.costs).unwrap();
            if tree.units.len() > 1 {
                multi_unit += 1;
            }
        }
    }
    assert!(solvable >= 60, "only {solvable} solvable instances");
    assert!(multi_unit >= 20, "only {multi_unit} multi-unit optima");
}
