//! Depth-first extraction of task trees from a unified network and
//! minimum-cost selection.
//!
//! A tree is grown from the goal backwards. Each required object is either
//! available in the environment (a leaf), already yielded by a finished unit
//! of the partial tree, or produced by one of its producers in the network;
//! the search branches over producers. A required object that is already
//! being produced further up the current path is a cycle and is pruned.

mod cost;

use std::collections::{BTreeMap, BTreeSet};
use std::rc::Rc;

use thiserror::Error;

use crate::canonical::canonical_tree;
use crate::model::{ObjectKey, ObjectNode, TaskTree, UnitId};
use crate::network::UnifiedNetwork;
use crate::scalar::Scalar;

pub use cost::{tree_cost, CostError, CostModel};

pub const DEFAULT_MAX_TREES: usize = 64;
pub const DEFAULT_MAX_DEPTH: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RetrievalError {
    #[error("no unit in the network yields `{goal}`")]
    GoalNotProducible { goal: String },
    #[error("`{goal}` is producible but no tree bottoms out in the available objects")]
    NoGroundedTree { goal: String },
    #[error("invalid query: {0}")]
    InvalidQuery(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetrievalQuery {
    pub goal: ObjectNode,
    /// Objects present in the environment. A required object is available when
    /// one of these satisfies it (same label, superset of states, same
    /// container when one is required).
    pub available: Vec<ObjectNode>,
    pub max_trees: usize,
    pub max_depth: usize,
}

impl RetrievalQuery {
    pub fn new(goal: ObjectNode, available: Vec<ObjectNode>) -> Self {
        RetrievalQuery {
            goal,
            available,
            max_trees: DEFAULT_MAX_TREES,
            max_depth: DEFAULT_MAX_DEPTH,
        }
    }

    pub fn with_caps(mut self, max_trees: usize, max_depth: usize) -> Self {
        self.max_trees = max_trees;
        self.max_depth = max_depth;
        self
    }

    fn check(&self) -> Result<(), RetrievalError> {
        if self.max_trees == 0 || self.max_depth == 0 {
            return Err(RetrievalError::InvalidQuery("caps must be positive".into()));
        }
        Ok(())
    }
}

struct Frame {
    key: ObjectKey,
    depth: usize,
    parent: Option<Rc<Frame>>,
}

fn path_contains(mut frame: Option<&Rc<Frame>>, key: &ObjectKey) -> bool {
    while let Some(f) = frame {
        if f.key == *key {
            return true;
        }
        frame = f.parent.as_ref();
    }
    false
}

#[derive(Clone)]
enum Task {
    Need {
        key: ObjectKey,
        path: Option<Rc<Frame>>,
    },
    Finish(UnitId),
}

#[derive(Clone)]
struct Partial<S> {
    order: Vec<UnitId>,
    chosen: BTreeSet<UnitId>,
    yielded: BTreeSet<ObjectKey>,
    cost: S,
    agenda: Vec<Task>,
}

enum Flow {
    Continue,
    Stop,
}

trait Visitor<S> {
    fn prune(&self, _partial_cost: &S) -> bool {
        false
    }
    fn complete(&mut self, partial: &Partial<S>) -> Flow;
}

struct Search<'a, S> {
    network: &'a UnifiedNetwork,
    query: &'a RetrievalQuery,
    available: BTreeMap<&'a str, Vec<&'a ObjectNode>>,
    price: &'a dyn Fn(UnitId) -> S,
}

impl<'a, S: Scalar> Search<'a, S> {
    fn new(network: &'a UnifiedNetwork, query: &'a RetrievalQuery, price: &'a dyn Fn(UnitId) -> S) -> Self {
        let mut available: BTreeMap<&str, Vec<&ObjectNode>> = BTreeMap::new();
        for object in &query.available {
            available.entry(object.label()).or_default().push(object);
        }
        Search {
            network,
            query,
            available,
            price,
        }
    }

    fn is_available(&self, key: &ObjectKey) -> bool {
        self.available.get(key.label.as_str()).is_some_and(|candidates| {
            candidates.iter().any(|have| {
                key.states.is_subset(have.states())
                    && key
                        .container
                        .as_deref()
                        .is_none_or(|place| have.container() == Some(place))
            })
        })
    }

    fn goal_producers(&self) -> Vec<(UnitId, ObjectKey)> {
        self.network
            .units()
            .filter_map(|unit| {
                unit.outputs()
                    .iter()
                    .find(|o| o.satisfies(&self.query.goal))
                    .map(|o| (unit.id(), o.key()))
            })
            .collect()
    }

    fn choose(&self, partial: &mut Partial<S>, unit_id: UnitId, key: ObjectKey, path: Option<Rc<Frame>>) {
        let unit = self.network.get(unit_id).expect("producer index refers to stored units");
        partial.chosen.insert(unit_id);
        partial.cost = partial.cost.clone() + (self.price)(unit_id);
        partial.agenda.push(Task::Finish(unit_id));
        let depth = path.as_ref().map_or(0, |f| f.depth) + 1;
        let frame = Rc::new(Frame { key, depth, parent: path });
        for input in unit.inputs().iter().rev() {
            partial.agenda.push(Task::Need {
                key: input.key(),
                path: Some(Rc::clone(&frame)),
            });
        }
    }

    fn run(&self, visitor: &mut impl Visitor<S>) -> Result<(), RetrievalError> {
        let roots = self.goal_producers();
        if roots.is_empty() {
            return Err(RetrievalError::GoalNotProducible {
                goal: self.query.goal.to_string(),
            });
        }
        for (unit_id, key) in roots {
            let mut partial = Partial {
                order: Vec::new(),
                chosen: BTreeSet::new(),
                yielded: BTreeSet::new(),
                cost: S::zero(),
                agenda: Vec::new(),
            };
            self.choose(&mut partial, unit_id, key, None);
            if let Flow::Stop = self.explore(partial, visitor) {
                break;
            }
        }
        Ok(())
    }

    fn explore(&self, mut partial: Partial<S>, visitor: &mut impl Visitor<S>) -> Flow {
        loop {
            if visitor.prune(&partial.cost) {
                return Flow::Continue;
            }
            let Some(task) = partial.agenda.pop() else {
                return visitor.complete(&partial);
            };
            match task {
                Task::Finish(unit_id) => {
                    let unit = self.network.get(unit_id).expect("chosen units are stored");
                    partial.yielded.extend(unit.outputs().iter().map(ObjectNode::key));
                    partial.order.push(unit_id);
                }
                Task::Need { key, path } => {
                    if self.is_available(&key) {
                        continue;
                    }
                    if path_contains(path.as_ref(), &key) {
                        return Flow::Continue;
                    }
                    if partial.yielded.contains(&key) {
                        continue;
                    }
                    if path.as_ref().map_or(0, |f| f.depth) >= self.query.max_depth {
                        return Flow::Continue;
                    }
                    // Chosen-but-unfinished units are exactly the ones on the
                    // current path; using them again would be a cycle.
                    let candidates: Vec<UnitId> = self
                        .network
                        .producers_of(&key)
                        .filter(|id| !partial.chosen.contains(id))
                        .collect();
                    for candidate in candidates {
                        let mut branch = partial.clone();
                        self.choose(&mut branch, candidate, key.clone(), path.clone());
                        if let Flow::Stop = self.explore(branch, visitor) {
                            return Flow::Stop;
                        }
                    }
                    return Flow::Continue;
                }
            }
        }
    }

    fn build_tree(&self, partial: &Partial<S>) -> TaskTree {
        let units: Vec<_> = partial
            .order
            .iter()
            .map(|id| self.network.get(*id).expect("chosen units are stored").clone())
            .collect();
        let goal = units
            .last()
            .and_then(|root| root.outputs().iter().find(|o| o.satisfies(&self.query.goal)))
            .cloned()
            .unwrap_or_else(|| self.query.goal.clone());
        TaskTree::new(units, goal)
    }
}

struct CollectAll<'s, 'a, S> {
    search: &'s Search<'a, S>,
    seen: BTreeSet<BTreeSet<UnitId>>,
    trees: Vec<TaskTree>,
    cap: usize,
}

impl<S: Scalar> Visitor<S> for CollectAll<'_, '_, S> {
    fn complete(&mut self, partial: &Partial<S>) -> Flow {
        if self.seen.insert(partial.chosen.clone()) {
            self.trees.push(self.search.build_tree(partial));
        }
        if self.trees.len() >= self.cap {
            Flow::Stop
        } else {
            Flow::Continue
        }
    }
}

struct Cheapest<'s, 'a, S> {
    search: &'s Search<'a, S>,
    best: Option<(S, String, TaskTree)>,
}

impl<S: Scalar> Visitor<S> for Cheapest<'_, '_, S> {
    fn prune(&self, partial_cost: &S) -> bool {
        // Costs are non-negative, so a partial tree already dearer than the
        // best complete one cannot win. Equal cost is kept for tie-breaking.
        self.best.as_ref().is_some_and(|(best, _, _)| partial_cost > best)
    }

    fn complete(&mut self, partial: &Partial<S>) -> Flow {
        let tree = self.search.build_tree(partial);
        let canon = canonical_tree(&tree);
        let better = match &self.best {
            None => true,
            Some((cost, best_canon, _)) => {
                partial.cost < *cost || (partial.cost == *cost && canon < *best_canon)
            }
        };
        if better {
            self.best = Some((partial.cost.clone(), canon, tree));
        }
        Flow::Continue
    }
}

/// Enumerate up to `max_trees` distinct grounded trees for the goal, in
/// deterministic discovery order.
pub fn retrieve_all(network: &UnifiedNetwork, query: &RetrievalQuery) -> Result<Vec<TaskTree>, RetrievalError> {
    query.check()?;
    let price = |_: UnitId| 0.0f64;
    let search = Search::new(network, query, &price);
    let mut visitor = CollectAll {
        search: &search,
        seen: BTreeSet::new(),
        trees: Vec::new(),
        cap: query.max_trees,
    };
    search.run(&mut visitor)?;
    if visitor.trees.is_empty() {
        return Err(RetrievalError::NoGroundedTree {
            goal: query.goal.to_string(),
        });
    }
    Ok(visitor.trees)
}

/// Minimum-cost grounded tree; ties go to the lexicographically smallest
/// canonical serialization.
///
/// The search is exhaustive with cost-bound pruning and is not limited by
/// `max_trees`, so the result is the minimum over every tree `retrieve_all`
/// could enumerate without a cap.
pub fn retrieve_optimal<S: Scalar>(
    network: &UnifiedNetwork,
    query: &RetrievalQuery,
    model: &CostModel<S>,
) -> Result<(TaskTree, S), RetrievalError> {
    query.check()?;
    let price = |id: UnitId| {
        let unit = network.get(id).expect("priced units are stored");
        model.cost_of(unit.motion().label())
    };
    let search = Search::new(network, query, &price);
    let mut visitor = Cheapest {
        search: &search,
        best: None,
    };
    search.run(&mut visitor)?;
    visitor
        .best
        .map(|(cost, _, tree)| (tree, cost))
        .ok_or_else(|| RetrievalError::NoGroundedTree {
            goal: query.goal.to_string(),
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{FunctionalUnit, MotionNode};
    use crate::network::merge;
    use crate::transitions::TransitionTable;
    use crate::Exact;

    fn obj(label: &str, states: &[&str]) -> ObjectNode {
        ObjectNode::new(label, states).unwrap()
    }

    fn unit(motion: &str, inputs: Vec<ObjectNode>, outputs: Vec<ObjectNode>) -> FunctionalUnit {
        FunctionalUnit::new(inputs, MotionNode::new(motion).unwrap(), outputs)
    }

    fn table() -> TransitionTable {
        TransitionTable::parse("whole,sliced\nwhole,blended\nsliced,blended").unwrap()
    }

    fn smoothie_trees() -> Vec<TaskTree> {
        let whole = obj("strawberry", &["whole"]);
        let in_blender = |states: &[&str]| obj("strawberry", states).in_container("blender").unwrap();
        let smoothie = obj("smoothie", &["blended"]).in_container("blender").unwrap();
        let direct = TaskTree::new(
            vec![
                unit("place", vec![whole.clone()], vec![in_blender(&["whole"])]),
                unit("blend", vec![in_blender(&["whole"])], vec![smoothie.clone()]),
            ],
            smoothie.clone(),
        );
        let sliced = TaskTree::new(
            vec![
                unit("slice", vec![whole.clone()], vec![obj("strawberry", &["sliced"])]),
                unit("place", vec![obj("strawberry", &["sliced"])], vec![in_blender(&["sliced"])]),
                unit("blend", vec![in_blender(&["sliced"])], vec![smoothie.clone()]),
            ],
            smoothie,
        );
        vec![direct, sliced]
    }

    fn smoothie_query() -> RetrievalQuery {
        RetrievalQuery::new(
            obj("smoothie", &["blended"]),
            vec![obj("strawberry", &["whole", "red"])],
        )
    }

    #[test]
    fn both_smoothie_routes_are_found() {
        let (network, log) = merge(&smoothie_trees(), &table());
        assert!(log.is_empty());
        let trees = retrieve_all(&network, &smoothie_query()).unwrap();
        assert_eq!(trees.len(), 2);
        let lengths: BTreeSet<usize> = trees.iter().map(|t| t.units.len()).collect();
        assert_eq!(lengths, BTreeSet::from([2, 3]));
        for tree in &trees {
            assert!(tree.goal_reached());
        }
    }

    #[test]
    fn goal_without_producer() {
        let (network, _) = merge(&smoothie_trees(), &table());
        let query = RetrievalQuery::new(obj("pancake", &["cooked"]), vec![]);
        assert!(matches!(
            retrieve_all(&network, &query),
            Err(RetrievalError::GoalNotProducible { .. })
        ));
    }

    #[test]
    fn goal_without_grounding() {
        let (network, _) = merge(&smoothie_trees(), &table());
        let query = RetrievalQuery::new(obj("smoothie", &["blended"]), vec![obj("banana", &["whole"])]);
        assert!(matches!(
            retrieve_all(&network, &query),
            Err(RetrievalError::NoGroundedTree { .. })
        ));
    }

    #[test]
    fn tree_cap_is_honored() {
        let (network, _) = merge(&smoothie_trees(), &table());
        let query = smoothie_query().with_caps(1, 32);
        assert_eq!(retrieve_all(&network, &query).unwrap().len(), 1);
        assert!(matches!(
            retrieve_all(&network, &smoothie_query().with_caps(0, 32)),
            Err(RetrievalError::InvalidQuery(_))
        ));
    }

    #[test]
    fn depth_cap_prunes_long_routes() {
        let (network, _) = merge(&smoothie_trees(), &table());
        // The sliced route needs three nested producers.
        let trees = retrieve_all(&network, &smoothie_query().with_caps(64, 2)).unwrap();
        assert_eq!(trees.len(), 1);
        assert_eq!(trees[0].units.len(), 2);
    }

    #[test]
    fn cycles_are_pruned() {
        let a = obj("dough", &["rested"]);
        let b = obj("dough", &["kneaded"]);
        let table = TransitionTable::parse("rested,kneaded\nkneaded,rested").unwrap();
        let loop_tree = TaskTree::new(
            vec![
                unit("knead", vec![a.clone()], vec![b.clone()]),
                unit("rest", vec![b.clone()], vec![a.clone()]),
            ],
            a.clone(),
        );
        let (network, _) = merge(&[loop_tree], &table);
        let query = RetrievalQuery::new(a, vec![]);
        assert!(matches!(
            retrieve_all(&network, &query),
            Err(RetrievalError::NoGroundedTree { .. })
        ));
    }

    #[test]
    fn optimal_prefers_cheaper_route_and_is_deterministic() {
        let (network, _) = merge(&smoothie_trees(), &table());
        let costs: BTreeMap<String, Exact> = [
            ("place".to_string(), Exact::new(3, 10)),
            ("slice".to_string(), Exact::new(1, 10)),
            ("blend".to_string(), Exact::new(1, 10)),
        ]
        .into();
        let model = CostModel::new(costs, Exact::new(1, 2)).unwrap();
        let (tree, cost) = retrieve_optimal(&network, &smoothie_query(), &model).unwrap();
        assert_eq!(cost, Exact::new(2, 5));
        assert_eq!(tree.units.len(), 2);
        let (again, _) = retrieve_optimal(&network, &smoothie_query(), &model).unwrap();
        assert_eq!(canonical_tree(&tree), canonical_tree(&again));
    }

    #[test]
    fn zero_costs_break_ties_lexicographically() {
        let (network, _) = merge(&smoothie_trees(), &table());
        let (tree, cost) = retrieve_optimal(&network, &smoothie_query(), &CostModel::<Exact>::free()).unwrap();
        assert_eq!(cost, Exact::from_integer(0));
        let all = retrieve_all(&network, &smoothie_query()).unwrap();
        let smallest = all.iter().map(canonical_tree).min().unwrap();
        assert_eq!(canonical_tree(&tree), smallest);
    }
}
