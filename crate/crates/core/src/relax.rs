//! Task simplification: entity restriction, rule-based relaxation and the
//! complementary closure of importance sets.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mazenamo::{preds, DOMAIN_NAME, ROBOT};
use crate::pddl::{GroundAtom, Plan, Task};

/// A subset of a task's entities, by name.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ImportanceSet(BTreeSet<String>);

impl ImportanceSet {
    pub fn new() -> Self {
        ImportanceSet::default()
    }

    /// `names` plus every goal entity and every entity of a protected type.
    pub fn for_task<I, S>(task: &Task, names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut set: ImportanceSet = names.into_iter().collect();
        set.protect(task);
        set
    }

    /// Adds the entities no simplified task may lose.
    pub fn protect(&mut self, task: &Task) {
        let protected_types = rules_for(&task.domain).map_or(&[][..], |r| r.protected_types);
        self.0.extend(task.goal_entities());
        for e in &task.entities {
            if protected_types.contains(&e.ty.as_str()) {
                self.0.insert(e.name.clone());
            }
        }
    }

    pub fn all(task: &Task) -> Self {
        task.entities.iter().map(|e| e.name.clone()).collect()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.contains(name)
    }

    pub fn insert(&mut self, name: impl Into<String>) -> bool {
        self.0.insert(name.into())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn is_subset(&self, other: &ImportanceSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn union(&self, other: &ImportanceSet) -> ImportanceSet {
        ImportanceSet(self.0.union(&other.0).cloned().collect())
    }

    pub fn as_set(&self) -> &BTreeSet<String> {
        &self.0
    }
}

impl<S: Into<String>> FromIterator<S> for ImportanceSet {
    fn from_iter<T: IntoIterator<Item = S>>(iter: T) -> Self {
        ImportanceSet(iter.into_iter().map(Into::into).collect())
    }
}

impl<S: Into<String>> Extend<S> for ImportanceSet {
    fn extend<T: IntoIterator<Item = S>>(&mut self, iter: T) {
        self.0.extend(iter.into_iter().map(Into::into));
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RelaxError {
    #[error("goal entity `{0}` is not in the importance set")]
    MissingGoalEntity(String),
    #[error("entity `{0}` is not part of the task")]
    UnknownEntity(String),
}

/// The task over the entities of `set` only: atoms of the initial state that
/// mention any other entity are dropped; the goal is kept.
pub fn restrict_task(task: &Task, set: &ImportanceSet) -> Result<Task, RelaxError> {
    for name in set.iter() {
        if task.entity(name).is_none() {
            return Err(RelaxError::UnknownEntity(name.to_string()));
        }
    }
    for g in task.goal_entities() {
        if !set.contains(&g) {
            return Err(RelaxError::MissingGoalEntity(g));
        }
    }
    let keep = |a: &GroundAtom| a.args.iter().all(|x| set.contains(x));
    Ok(Task {
        name: task.name.clone(),
        domain: task.domain.clone(),
        entities: task.entities.iter().filter(|e| set.contains(&e.name)).cloned().collect(),
        init: task.init.iter().filter(|a| keep(a)).cloned().collect(),
        goal: task.goal.clone(),
    })
}

/// Every entity bound by some step of `plan`.
pub fn entities_of_plan(plan: &Plan) -> ImportanceSet {
    plan.steps.iter().flat_map(|s| s.args.iter().cloned()).collect()
}

/// Domain-specific simplification rules.
pub struct RuleSet {
    pub domain: &'static str,
    /// Entity types always kept in simplified tasks.
    pub protected_types: &'static [&'static str],
    /// Binary predicates `p(o, x)` whose arguments must be kept together.
    pub binding_predicates: &'static [&'static str],
    pub relax: fn(&Task) -> Task,
}

static RULES: [RuleSet; 1] = [RuleSet {
    domain: DOMAIN_NAME,
    protected_types: &[ROBOT],
    binding_predicates: &[preds::O_AT],
    relax: relax_light_boxes,
}];

pub fn rules_for(domain: &str) -> Option<&'static RuleSet> {
    RULES.iter().find(|r| r.domain == domain)
}

/// Removes every light box that sits in a cell, freeing its cell unless
/// another box remains there. Boxes mentioned by the goal are kept.
pub fn relax_light_boxes(task: &Task) -> Task {
    let goal_entities = task.goal_entities();
    let light: BTreeSet<&str> = task
        .init
        .iter()
        .filter(|a| a.predicate == preds::IS_LIGHT)
        .map(|a| a.args[0].as_str())
        .filter(|o| !goal_entities.contains(*o))
        .collect();
    let located: Vec<(&str, &str)> = task
        .init
        .iter()
        .filter(|a| a.predicate == preds::O_AT)
        .map(|a| (a.args[0].as_str(), a.args[1].as_str()))
        .collect();
    let removed: BTreeSet<&str> = located.iter().map(|&(o, _)| o).filter(|o| light.contains(o)).collect();
    if removed.is_empty() {
        return task.clone();
    }
    let mut init: BTreeSet<GroundAtom> = BTreeSet::new();
    for a in &task.init {
        if a.args.iter().any(|x| removed.contains(x.as_str())) {
            // A box freed from its stacked load becomes clear.
            if a.predicate == preds::UPON && removed.contains(a.args[0].as_str()) && !removed.contains(a.args[1].as_str()) {
                init.insert(GroundAtom::new(preds::CLEAR, &[&a.args[1]]));
            }
            continue;
        }
        init.insert(a.clone());
    }
    for &(o, p) in &located {
        if removed.contains(o) && !located.iter().any(|&(o2, p2)| p2 == p && !removed.contains(o2)) {
            init.insert(GroundAtom::new(preds::IS_EMPTY, &[p]));
        }
    }
    Task {
        name: task.name.clone(),
        domain: task.domain.clone(),
        entities: task
            .entities
            .iter()
            .filter(|e| !removed.contains(e.name.as_str()))
            .cloned()
            .collect(),
        init,
        goal: task.goal.clone(),
    }
}

/// Applies the domain's relaxation rule; tasks of domains without one are
/// returned unchanged.
pub fn relax(task: &Task) -> Task {
    match rules_for(&task.domain) {
        Some(r) => (r.relax)(task),
        None => task.clone(),
    }
}

/// Least superset of `set` closed under: for every binding atom `p(o, x)` of
/// the initial state, `o` is in the set iff `x` is.
pub fn complementary_closure(task: &Task, set: &ImportanceSet) -> ImportanceSet {
    let binding = rules_for(&task.domain).map_or(&[][..], |r| r.binding_predicates);
    let pairs: Vec<(&str, &str)> = task
        .init
        .iter()
        .filter(|a| a.args.len() == 2 && binding.contains(&a.predicate.as_str()))
        .map(|a| (a.args[0].as_str(), a.args[1].as_str()))
        .collect();
    let mut out = set.clone();
    loop {
        let mut grew = false;
        for &(a, b) in &pairs {
            match (out.contains(a), out.contains(b)) {
                (true, false) => grew |= out.insert(b),
                (false, true) => grew |= out.insert(a),
                _ => {}
            }
        }
        if !grew {
            return out;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mazenamo::{box_name, mazenamo_domain, pos_name, stacked_box_name, Cell, MazeGrid};
    use crate::pddl::{ground, PlanStep};
    use crate::search::{solve_satisficing, Deadline};

    fn grid(rows: &[&str]) -> MazeGrid {
        MazeGrid::from_ascii(&rows.join("\n"), 0).unwrap()
    }

    #[test]
    fn restricting_to_everything_is_identity() {
        let t = grid(&["#####", "#>LH#", "#...#", "#..G#", "#####"]).to_task();
        assert_eq!(restrict_task(&t, &ImportanceSet::all(&t)).unwrap(), t);
    }

    #[test]
    fn dropping_a_position_drops_its_atoms() {
        let t = grid(&["#####", "#>LH#", "#...#", "#..G#", "#####"]).to_task();
        let mut set = ImportanceSet::all(&t);
        set.0.remove("p1_2");
        let r = restrict_task(&t, &set).unwrap();
        assert!(r.entity("p1_2").is_none());
        assert!(r.init.iter().all(|a| !a.mentions("p1_2")));
        assert!(r.init.iter().any(|a| a.mentions("o1_2")));
    }

    #[test]
    fn goal_entities_are_required() {
        let t = grid(&["#####", "#>..#", "#...#", "#..G#", "#####"]).to_task();
        let set: ImportanceSet = ["p1_1"].into_iter().collect();
        assert_eq!(
            restrict_task(&t, &set),
            Err(RelaxError::MissingGoalEntity("p3_3".into()))
        );
        let set = ImportanceSet::for_task(&t, ["p1_1"]);
        assert!(set.contains("robot") && set.contains("p3_3"));
        let bogus: ImportanceSet = ["robot", "p3_3", "p9_9"].into_iter().collect();
        assert_eq!(restrict_task(&t, &bogus), Err(RelaxError::UnknownEntity("p9_9".into())));
    }

    #[test]
    fn relaxing_without_light_boxes_is_identity() {
        let t = grid(&["#####", "#>.H#", "#...#", "#..G#", "#####"]).to_task();
        assert_eq!(relax_light_boxes(&t), t);
    }

    #[test]
    fn ground_light_box_frees_its_cell() {
        let t = grid(&["#####", "#>L.#", "#...#", "#..G#", "#####"]).to_task();
        let r = relax_light_boxes(&t);
        let (o, p) = (box_name((1, 2)), pos_name((1, 2)));
        assert!(r.entity(&o).is_none());
        assert!(r.init.iter().all(|a| !a.mentions(&o)));
        assert!(r.init.contains(&GroundAtom::new(preds::IS_EMPTY, &[&p])));
        r.check(&mazenamo_domain()).unwrap();
    }

    #[test]
    fn stacked_light_box_leaves_a_clear_heavy_base() {
        let mut g = grid(&["#####", "#>..#", "#...#", "#..G#", "#####"]);
        g.set((1, 2), Cell::LightOnHeavy);
        let t = g.to_task();
        let r = relax_light_boxes(&t);
        let (top, base, p) = (stacked_box_name((1, 2)), box_name((1, 2)), pos_name((1, 2)));
        assert!(r.entity(&top).is_none());
        assert!(r.entity(&base).is_some());
        assert!(r.init.contains(&GroundAtom::new(preds::CLEAR, &[&base])));
        assert!(!r.init.contains(&GroundAtom::new(preds::IS_EMPTY, &[&p])));
        assert!(r.init.contains(&GroundAtom::new(preds::O_AT, &[&base, &p])));
    }

    #[test]
    fn plan_entities() {
        assert!(entities_of_plan(&Plan::default()).is_empty());
        let plan = Plan::new(vec![PlanStep::new("move_up", &["robot", "p2_1", "p1_1"])]);
        let set = entities_of_plan(&plan);
        assert_eq!(set.iter().collect::<Vec<_>>(), ["p1_1", "p2_1", "robot"]);
    }

    #[test]
    fn closure_follows_box_positions_both_ways() {
        let mut g = grid(&["#####", "#>H.#", "#...#", "#..G#", "#####"]);
        g.set((2, 2), Cell::LightOnHeavy);
        let t = g.to_task();
        let from_box = complementary_closure(&t, &["o1_2"].into_iter().collect());
        assert_eq!(from_box.iter().collect::<Vec<_>>(), ["o1_2", "p1_2"]);
        // A cell pulls in both boxes of its stack.
        let from_cell = complementary_closure(&t, &["p2_2"].into_iter().collect());
        assert_eq!(from_cell.iter().collect::<Vec<_>>(), ["o2_2", "o2_2s", "p2_2"]);
        // The top box reaches its base through the shared cell.
        let from_top = complementary_closure(&t, &["o2_2s"].into_iter().collect());
        assert_eq!(from_top, from_cell);
        assert_eq!(complementary_closure(&t, &from_top), from_top);
    }

    #[test]
    fn relaxed_blocked_corridor_becomes_solvable_faster() {
        // Light boxes fill the corridor; the relaxed task is a straight walk.
        let t = grid(&["#######", "#>LLLG#", "#######", "#######", "#######", "#######", "#######"]).to_task();
        let d = mazenamo_domain();
        let relaxed = relax_light_boxes(&t);
        let out = solve_satisficing(&ground(&d, &relaxed).unwrap(), &Deadline::unbounded());
        assert_eq!(out.plan().unwrap().len(), 4);
    }
}
