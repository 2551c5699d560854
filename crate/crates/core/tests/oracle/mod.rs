//! Random networks and a brute-force optimum that shares no code with the
//! library search.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use treeplan_core::{
    merge, CostModel, Exact, FunctionalUnit, MotionNode, ObjectNode, RetrievalQuery, TaskTree, TransitionTable,
    UnifiedNetwork,
};

pub const LABELS: &[&str] = &["flour", "egg", "milk", "dough", "batter"];
pub const STATES: &[&str] = &["raw", "mixed", "hot", "whole"];
pub const PLACES: &[&str] = &["bowl", "pan"];
pub const MOTIONS: &[&str] = &["mix", "pour", "heat", "crack", "fold"];

pub fn permissive_table() -> TransitionTable {
    let mut table = TransitionTable::new();
    for from in STATES {
        for to in STATES {
            table.insert(from, to, None);
        }
    }
    table
}

pub fn random_object(rng: &mut ChaCha8Rng) -> ObjectNode {
    let label = LABELS[rng.gen_range(0..LABELS.len())];
    let state = STATES[rng.gen_range(0..STATES.len())];
    let node = ObjectNode::new(label, [state]).unwrap();
    if rng.gen_bool(0.3) {
        node.in_container(PLACES[rng.gen_range(0..PLACES.len())]).unwrap()
    } else {
        node
    }
}

/// A small pool of objects so that units chain into each other.
pub fn random_units(rng: &mut ChaCha8Rng, count: usize) -> Vec<FunctionalUnit> {
    let pool: Vec<ObjectNode> = (0..7).map(|_| random_object(rng)).collect();
    let mut units = Vec::new();
    while units.len() < count {
        let inputs: Vec<_> = (0..rng.gen_range(1..=2)).map(|_| pool.choose(rng).unwrap().clone()).collect();
        let outputs: Vec<_> = (0..rng.gen_range(1..=2)).map(|_| pool.choose(rng).unwrap().clone()).collect();
        let motion = MotionNode::new(MOTIONS[rng.gen_range(0..MOTIONS.len())]).unwrap();
        let unit = FunctionalUnit::new(inputs, motion, outputs);
        if !units.contains(&unit) {
            units.push(unit);
        }
    }
    units
}

pub fn random_costs(rng: &mut ChaCha8Rng) -> CostModel<Exact> {
    let costs: BTreeMap<String, Exact> = MOTIONS
        .iter()
        .map(|m| (m.to_string(), Exact::new(rng.gen_range(0..=20), 20)))
        .collect();
    CostModel::new(costs, Exact::new(1, 2)).unwrap()
}

pub struct Instance {
    pub units: Vec<FunctionalUnit>,
    pub network: UnifiedNetwork,
    pub query: RetrievalQuery,
    pub costs: CostModel<Exact>,
}

pub fn instance(seed: u64, size: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let units = random_units(&mut rng, size);
    let (network, log) = merge(&[TaskTree::new(units.clone(), units[0].outputs()[0].clone())], &permissive_table());
    assert!(log.is_empty());
    let all_inputs: Vec<ObjectNode> = units.iter().flat_map(|u| u.inputs().to_vec()).collect();
    let available: Vec<ObjectNode> = all_inputs.iter().filter(|_| rng.gen_bool(0.5)).cloned().collect();
    let target = units.choose(&mut rng).unwrap().outputs()[0].clone();
    let goal = ObjectNode::new(target.label(), target.states()).unwrap();
    Instance {
        units,
        network,
        query: RetrievalQuery::new(goal, available),
        costs: random_costs(&mut rng),
    }
}

/// Independent oracle: the cheapest subset of units that can all fire in some
/// order from the available objects and yields the goal. Objects are indexed
/// so that a subset's fixpoint is a handful of bit operations; units that
/// cannot fire even with every other unit present are left out up front.
pub fn brute_force_optimum(inst: &Instance) -> Option<Exact> {
    let all: Vec<&FunctionalUnit> = inst.network.units().collect();
    let mut objects: Vec<&ObjectNode> = Vec::new();
    for unit in &all {
        for node in unit.inputs().iter().chain(unit.outputs()) {
            if !objects.contains(&node) {
                objects.push(node);
            }
        }
    }
    assert!(objects.len() <= 128, "too many distinct objects for the oracle");
    let bit = |node: &ObjectNode| 1u128 << objects.iter().position(|o| *o == node).unwrap();
    let have = |node: &ObjectNode| {
        inst.query.available.iter().any(|a| {
            a.label() == node.label()
                && node.states().iter().all(|s| a.states().contains(s))
                && (node.container().is_none() || a.container() == node.container())
        })
    };
    let available: u128 = objects.iter().filter(|o| have(o)).fold(0, |acc, o| acc | bit(o));
    let needs: Vec<u128> = all.iter().map(|u| u.inputs().iter().fold(0, |acc, x| acc | bit(x))).collect();
    let gives: Vec<u128> = all.iter().map(|u| u.outputs().iter().fold(0, |acc, x| acc | bit(x))).collect();

    let fixpoint = |members: &[usize]| -> (usize, u128) {
        let (mut fired, mut made) = (0usize, available);
        let mut done = vec![false; members.len()];
        loop {
            let mut progress = false;
            for (slot, &i) in members.iter().enumerate() {
                if !done[slot] && needs[i] & !made == 0 {
                    done[slot] = true;
                    fired += 1;
                    made |= gives[i];
                    progress = true;
                }
            }
            if !progress {
                return (fired, made);
            }
        }
    };
    let everything: Vec<usize> = (0..all.len()).collect();
    let (_, reachable) = fixpoint(&everything);
    let usable: Vec<usize> = everything.into_iter().filter(|&i| needs[i] & !reachable == 0).collect();
    let goal_bits: u128 = objects
        .iter()
        .filter(|o| o.label() == inst.query.goal.label() && inst.query.goal.states().iter().all(|s| o.states().contains(s)))
        .fold(0, |acc, o| acc | bit(o));
    let price: Vec<Exact> = all.iter().map(|u| inst.costs.cost_of(u.motion().label())).collect();

    let mut best: Option<Exact> = None;
    for mask in 1u32..(1 << usable.len()) {
        let members: Vec<usize> = (0..usable.len()).filter(|k| mask & (1 << k) != 0).map(|k| usable[k]).collect();
        if !members.iter().any(|&i| gives[i] & goal_bits != 0) {
            continue;
        }
        let cost = members.iter().fold(Exact::from_integer(0), |acc, &i| acc + price[i]);
        if best.is_some_and(|b| cost >= b) {
            continue;
        }
        if fixpoint(&members).0 == members.len() {
            best = Some(cost);
        }
    }
    best
}
