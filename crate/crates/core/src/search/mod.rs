//! Budgeted forward-search planners over a [`GroundedProblem`].
//!
//! * [`solve_satisficing`]: greedy best-first search on the additive
//!   delete-relaxation estimate.
//! * [`solve_optimal`]: A* on the (admissible) max estimate; unit action costs.
//! * [`bfs_oracle`]: uninformed breadth-first search, for tests on small tasks.
//!
//! Ties are broken by lower g, then by insertion order, so results are fully
//! determined by the problem and budget.

mod heuristic;

use std::cmp::Reverse;
use std::collections::hash_map::Entry;
use std::collections::{BinaryHeap, HashMap, VecDeque};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pddl::{GroundedProblem, Plan, State};

pub use heuristic::{relaxed_reachable_actions, Combine, RelaxedHeuristic, INFINITE};

/// Atom-count guard for [`bfs_oracle`].
pub const ORACLE_MAX_ATOMS: usize = 4096;

/// Work units per pseudo-second that roughly match one wall-clock second of
/// release-build search on a current desktop core.
pub const DEFAULT_WORK_RATE: f64 = 1.0e7;

/// Time source for budgets.
///
/// `Wall` is the monotonic clock. `Work` is a deterministic pseudo-clock that
/// advances only when planners charge it for work done; it makes budgeted
/// runs reproducible regardless of machine load.
#[derive(Debug, Clone)]
pub enum Clock {
    Wall { origin: Instant },
    Work { units: Arc<AtomicU64>, per_second: f64 },
}

impl Clock {
    pub fn wall() -> Self {
        Clock::Wall { origin: Instant::now() }
    }

    /// # Panics
    /// If `per_second` is not strictly positive.
    pub fn work(per_second: f64) -> Self {
        assert!(per_second > 0.0, "work rate must be positive");
        Clock::Work {
            units: Arc::new(AtomicU64::new(0)),
            per_second,
        }
    }

    pub fn now_secs(&self) -> f64 {
        match self {
            Clock::Wall { origin } => origin.elapsed().as_secs_f64(),
            Clock::Work { units, per_second } => units.load(Ordering::Relaxed) as f64 / per_second,
        }
    }

    /// Advances a work clock; no-op on the wall clock.
    pub fn charge(&self, units: u64) {
        if let Clock::Work { units: u, .. } = self {
            u.fetch_add(units, Ordering::Relaxed);
        }
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self, Clock::Work { .. })
    }
}

/// A time budget on some [`Clock`], optionally combined with a node-expansion
/// cap. Expiry is polled once per node expansion.
#[derive(Debug, Clone)]
pub struct Deadline {
    clock: Clock,
    start: f64,
    budget: Option<f64>,
    max_expansions: Option<u64>,
}

impl Deadline {
    /// A wall-clock budget of `seconds` starting now.
    ///
    /// # Panics
    /// If `seconds` is not strictly positive.
    pub fn after_secs(seconds: f64) -> Self {
        Deadline::on(&Clock::wall(), seconds)
    }

    /// A budget of `seconds` on `clock`, starting at its current reading.
    ///
    /// # Panics
    /// If `seconds` is not strictly positive.
    pub fn on(clock: &Clock, seconds: f64) -> Self {
        assert!(seconds > 0.0, "budget must be positive, got {seconds}");
        Deadline {
            clock: clock.clone(),
            start: clock.now_secs(),
            budget: Some(seconds),
            max_expansions: None,
        }
    }

    pub fn unbounded() -> Self {
        Deadline {
            clock: Clock::wall(),
            start: 0.0,
            budget: None,
            max_expansions: None,
        }
    }

    /// Caps the number of expansions a single search may perform.
    pub fn with_max_expansions(mut self, n: u64) -> Self {
        self.max_expansions = Some(n);
        self
    }

    /// A child deadline starting now on the same clock that lasts at most
    /// `seconds` and never outlives `self`.
    pub fn child(&self, seconds: f64) -> Deadline {
        Deadline {
            clock: self.clock.clone(),
            start: self.clock.now_secs(),
            budget: Some(seconds.max(0.0).min(self.remaining_secs())),
            max_expansions: self.max_expansions,
        }
    }

    pub fn clock(&self) -> &Clock {
        &self.clock
    }

    pub fn charge(&self, units: u64) {
        self.clock.charge(units);
    }

    /// Charges up to `units`, stopping at expiry as an interrupted job would.
    /// Returns false when the budget ran out first.
    pub fn charge_within(&self, units: u64) -> bool {
        if let (Clock::Work { per_second, .. }, Some(_)) = (&self.clock, self.budget) {
            let room = (self.remaining_secs() * per_second).ceil() as u64;
            if units > room {
                self.clock.charge(room);
                return false;
            }
        }
        self.clock.charge(units);
        !self.expired()
    }

    pub fn elapsed_secs(&self) -> f64 {
        self.clock.now_secs() - self.start
    }

    pub fn remaining_secs(&self) -> f64 {
        match self.budget {
            Some(b) => (b - self.elapsed_secs()).max(0.0),
            None => f64::INFINITY,
        }
    }

    pub fn budget_secs(&self) -> Option<f64> {
        self.budget
    }

    pub fn expired(&self) -> bool {
        self.budget.is_some_and(|b| self.elapsed_secs() >= b)
    }

    fn exhausted(&self, expansions: u64) -> bool {
        self.max_expansions.is_some_and(|m| expansions >= m) || self.expired()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "plan", rename_all = "snake_case")]
pub enum Verdict {
    Solved(Plan),
    ProvedUnsolvable,
    TimedOut,
    NodeLimitExceeded,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchStats {
    pub expansions: u64,
    pub generated: u64,
    pub elapsed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    #[serde(flatten)]
    pub verdict: Verdict,
    #[serde(flatten)]
    pub stats: SearchStats,
}

impl SearchOutcome {
    pub fn plan(&self) -> Option<&Plan> {
        match &self.verdict {
            Verdict::Solved(p) => Some(p),
            _ => None,
        }
    }

    pub fn is_solved(&self) -> bool {
        self.plan().is_some()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SearchError {
    #[error("problem has {atoms} atoms; the oracle accepts at most {max}")]
    TooLarge { atoms: usize, max: usize },
}

/// Work-clock units charged for grounding `problem`: one per action plus one
/// per precondition and effect atom.
pub fn grounding_work(problem: &GroundedProblem) -> u64 {
    problem
        .actions
        .iter()
        .map(|a| 1 + (a.pre.len() + a.add.len() + a.del.len()) as u64)
        .sum()
}

/// Additive delete-relaxation estimate for one state.
pub fn h_add(state: &State, problem: &GroundedProblem) -> u64 {
    RelaxedHeuristic::new(problem, Combine::Add).evaluate(state)
}

/// Max delete-relaxation estimate for one state (admissible under unit costs).
pub fn h_max(state: &State, problem: &GroundedProblem) -> u64 {
    RelaxedHeuristic::new(problem, Combine::Max).evaluate(state)
}

/// Applicable-action lookup keyed on one "trigger" precondition per action.
struct SuccessorGenerator {
    by_trigger: Vec<Vec<u32>>,
    always: Vec<u32>,
}

impl SuccessorGenerator {
    fn new(problem: &GroundedProblem, actions: &[u32]) -> Self {
        let mut freq = vec![0usize; problem.num_atoms()];
        for &a in actions {
            for &p in &problem.actions[a as usize].pre {
                freq[p as usize] += 1;
            }
        }
        let mut by_trigger = vec![Vec::new(); problem.num_atoms()];
        let mut always = Vec::new();
        for &a in actions {
            let pre = &problem.actions[a as usize].pre;
            match pre.iter().min_by_key(|&&p| (freq[p as usize], p)) {
                Some(&p) => by_trigger[p as usize].push(a),
                None => always.push(a),
            }
        }
        SuccessorGenerator { by_trigger, always }
    }

    /// Applicable actions in ascending index order.
    fn applicable(&self, problem: &GroundedProblem, state: &State, out: &mut Vec<u32>) {
        out.clear();
        out.extend_from_slice(&self.always);
        for atom in state.iter() {
            for &a in &self.by_trigger[atom as usize] {
                if state.contains_all(&problem.actions[a as usize].pre) {
                    out.push(a);
                }
            }
        }
        out.sort_unstable();
    }
}

struct Node {
    state: State,
    parent: u32,
    action: u32,
    g: u32,
}

const ROOT: u32 = u32::MAX;

fn extract_plan(problem: &GroundedProblem, nodes: &[Node], mut id: u32) -> Plan {
    let mut steps = Vec::new();
    while nodes[id as usize].parent != ROOT {
        steps.push(problem.actions[nodes[id as usize].action as usize].step());
        id = nodes[id as usize].parent;
    }
    steps.reverse();
    Plan::new(steps)
}

/// Greedy best-first search ordered by the additive estimate.
pub fn solve_satisficing(problem: &GroundedProblem, deadline: &Deadline) -> SearchOutcome {
    best_first(problem, deadline, Combine::Add, false)
}

/// A* with the max estimate; returns a shortest plan.
pub fn solve_optimal(problem: &GroundedProblem, deadline: &Deadline) -> SearchOutcome {
    best_first(problem, deadline, Combine::Max, true)
}

fn best_first(
    problem: &GroundedProblem,
    deadline: &Deadline,
    combine: Combine,
    optimal: bool,
) -> SearchOutcome {
    let clock = deadline.clock().clone();
    let started = clock.now_secs();
    let setup_fits = deadline.charge_within(problem.actions.len() as u64);
    let relevant = relaxed_reachable_actions(problem);
    let succ = SuccessorGenerator::new(problem, &relevant);
    let eval_cost = relevant.len() as u64 + 1;
    let mut h = RelaxedHeuristic::with_actions(problem, combine, relevant);
    let mut stats = SearchStats::default();
    let finish = |verdict: Verdict, mut stats: SearchStats| {
        stats.elapsed = clock.now_secs() - started;
        SearchOutcome { verdict, stats }
    };

    if !setup_fits || !deadline.charge_within(eval_cost) {
        return finish(Verdict::TimedOut, stats);
    }
    let h0 = h.evaluate(&problem.init);
    if h0 == INFINITE {
        return finish(Verdict::ProvedUnsolvable, stats);
    }
    let mut nodes = vec![Node {
        state: problem.init.clone(),
        parent: ROOT,
        action: ROOT,
        g: 0,
    }];
    // Best g known per state; for greedy search only membership matters.
    let mut best_g: HashMap<State, (u32, u32)> = HashMap::new();
    best_g.insert(problem.init.clone(), (0, 0));
    // (primary key, g, insertion sequence, node id)
    let mut open: BinaryHeap<Reverse<(u64, u32, u64, u32)>> = BinaryHeap::new();
    let key = |g: u32, hv: u64| if optimal { hv + g as u64 } else { hv };
    let mut seq = 0u64;
    open.push(Reverse((key(0, h0), 0, seq, 0)));
    let mut buf = Vec::new();

    while let Some(Reverse((_, g, _, id))) = open.pop() {
        if optimal {
            let (best, _) = best_g[&nodes[id as usize].state];
            if g > best {
                continue;
            }
        }
        if problem.is_goal(&nodes[id as usize].state) {
            return finish(Verdict::Solved(extract_plan(problem, &nodes, id)), stats);
        }
        if deadline.exhausted(stats.expansions) {
            return finish(Verdict::TimedOut, stats);
        }
        stats.expansions += 1;
        succ.applicable(problem, &nodes[id as usize].state, &mut buf);
        for &a in &buf {
            let next = problem.successor(&nodes[id as usize].state, &problem.actions[a as usize]);
            stats.generated += 1;
            let ng = g + 1;
            let fresh = match best_g.entry(next) {
                Entry::Vacant(v) => {
                    let state = v.key().clone();
                    v.insert((ng, nodes.len() as u32));
                    Some(state)
                }
                Entry::Occupied(mut o) if optimal && ng < o.get().0 => {
                    o.insert((ng, nodes.len() as u32));
                    Some(o.key().clone())
                }
                Entry::Occupied(_) => None,
            };
            let Some(state) = fresh else { continue };
            if !deadline.charge_within(eval_cost) {
                return finish(Verdict::TimedOut, stats);
            }
            let hv = h.evaluate(&state);
            if hv == INFINITE {
                continue;
            }
            seq += 1;
            let nid = nodes.len() as u32;
            nodes.push(Node {
                state,
                parent: id,
                action: a,
                g: ng,
            });
            open.push(Reverse((key(ng, hv), ng, seq, nid)));
        }
    }
    finish(Verdict::ProvedUnsolvable, stats)
}

/// Breadth-first search; shortest plan, or `NodeLimitExceeded` once more than
/// `node_limit` states have been generated.
pub fn bfs_oracle(problem: &GroundedProblem, node_limit: u64) -> Result<SearchOutcome, SearchError> {
    if problem.num_atoms() > ORACLE_MAX_ATOMS {
        return Err(SearchError::TooLarge {
            atoms: problem.num_atoms(),
            max: ORACLE_MAX_ATOMS,
        });
    }
    let started = Instant::now();
    let all: Vec<u32> = (0..problem.actions.len() as u32).collect();
    let succ = SuccessorGenerator::new(problem, &all);
    let mut stats = SearchStats::default();
    let finish = |verdict: Verdict, mut stats: SearchStats| {
        stats.elapsed = started.elapsed().as_secs_f64();
        Ok(SearchOutcome { verdict, stats })
    };
    let mut nodes = vec![Node {
        state: problem.init.clone(),
        parent: ROOT,
        action: ROOT,
        g: 0,
    }];
    if problem.is_goal(&problem.init) {
        return finish(Verdict::Solved(Plan::default()), stats);
    }
    let mut seen: HashMap<State, ()> = HashMap::new();
    seen.insert(problem.init.clone(), ());
    let mut queue = VecDeque::from([0u32]);
    let mut buf = Vec::new();
    while let Some(id) = queue.pop_front() {
        stats.expansions += 1;
        succ.applicable(problem, &nodes[id as usize].state, &mut buf);
        for &a in &buf {
            let next = problem.successor(&nodes[id as usize].state, &problem.actions[a as usize]);
            if seen.contains_key(&next) {
                continue;
            }
            stats.generated += 1;
            if stats.generated > node_limit {
                return finish(Verdict::NodeLimitExceeded, stats);
            }
            seen.insert(next.clone(), ());
            let goal = problem.is_goal(&next);
            let nid = nodes.len() as u32;
            let g = nodes[id as usize].g + 1;
            nodes.push(Node {
                state: next,
                parent: id,
                action: a,
                g,
            });
            if goal {
                return finish(Verdict::Solved(extract_plan(problem, &nodes, nid)), stats);
            }
            queue.push_back(nid);
        }
    }
    finish(Verdict::ProvedUnsolvable, stats)
}

/// Exact goal distance of every state reachable from the initial state, by
/// backward breadth-first search over the explicit reachable graph.
///
/// Test oracle for heuristic admissibility; returns `None` past `node_limit`.
pub fn exact_goal_distances(
    problem: &GroundedProblem,
    node_limit: usize,
) -> Option<HashMap<State, u64>> {
    let all: Vec<u32> = (0..problem.actions.len() as u32).collect();
    let succ = SuccessorGenerator::new(problem, &all);
    let mut ids: HashMap<State, usize> = HashMap::new();
    let mut states = vec![problem.init.clone()];
    ids.insert(problem.init.clone(), 0);
    let mut preds: Vec<Vec<usize>> = vec![Vec::new()];
    let mut buf = Vec::new();
    let mut i = 0;
    while i < states.len() {
        succ.applicable(problem, &states[i], &mut buf);
        for &a in &buf {
            let next = problem.successor(&states[i], &problem.actions[a as usize]);
            let j = match ids.get(&next) {
                Some(&j) => j,
                None => {
                    if states.len() >= node_limit {
                        return None;
                    }
                    ids.insert(next.clone(), states.len());
                    states.push(next);
                    preds.push(Vec::new());
                    states.len() - 1
                }
            };
            preds[j].push(i);
        }
        i += 1;
    }
    let mut dist = vec![INFINITE; states.len()];
    let mut queue = VecDeque::new();
    for (k, s) in states.iter().enumerate() {
        if problem.is_goal(s) {
            dist[k] = 0;
            queue.push_back(k);
        }
    }
    while let Some(k) = queue.pop_front() {
        for &p in &preds[k] {
            if dist[p] == INFINITE {
                dist[p] = dist[k] + 1;
                queue.push_back(p);
            }
        }
    }
    Some(states.into_iter().zip(dist).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pddl::{ground, parse_domain, parse_task, validate_plan, Domain, Task};

    const TOY: &str = "
        (define (domain toy) (:types cell)
          (:predicates (at ?c - cell) (adj ?a - cell ?b - cell) (key) (door ?c - cell))
          (:action go :parameters (?a ?b - cell)
            :precondition (and (at ?a) (adj ?a ?b))
            :effect (and (at ?b) (not (at ?a)))))";

    fn chain(k: usize) -> (Domain, Task) {
        let d = parse_domain(TOY).unwrap();
        let cells: Vec<String> = (0..=k).map(|i| format!("c{i:02}")).collect();
        let mut init = format!("(at {})", cells[0]);
        for w in cells.windows(2) {
            init += &format!(" (adj {} {}) (adj {} {})", w[0], w[1], w[1], w[0]);
        }
        let text = format!(
            "(define (problem p) (:domain toy) (:objects {} - cell) (:init {init}) (:goal (at {})))",
            cells.join(" "),
            cells[k]
        );
        let t = parse_task(&text, &d).unwrap();
        (d, t)
    }

    #[test]
    fn corridor_heuristics_and_plans() {
        let (d, t) = chain(4);
        let g = ground(&d, &t).unwrap();
        assert_eq!(h_add(&g.init, &g), 4);
        assert_eq!(h_max(&g.init, &g), 4);
        let sat = solve_satisficing(&g, &Deadline::unbounded());
        let opt = solve_optimal(&g, &Deadline::unbounded());
        let bfs = bfs_oracle(&g, 10_000).unwrap();
        for out in [&sat, &opt, &bfs] {
            let plan = out.plan().unwrap();
            assert_eq!(plan.len(), 4);
            assert!(validate_plan(&d, &t, plan).unwrap().is_valid());
        }
    }

    #[test]
    fn goal_in_init_solves_at_root() {
        let (d, mut t) = chain(2);
        t.goal = t.init.iter().filter(|a| a.predicate == "at").cloned().collect();
        let g = ground(&d, &t).unwrap();
        assert_eq!(h_add(&g.init, &g), 0);
        let out = solve_satisficing(&g, &Deadline::unbounded());
        assert_eq!(out.verdict, Verdict::Solved(Plan::default()));
        assert_eq!(out.stats.expansions, 0);
        assert_eq!(solve_optimal(&g, &Deadline::unbounded()).plan().unwrap().len(), 0);
        assert_eq!(bfs_oracle(&g, 10).unwrap().plan().unwrap().len(), 0);
    }

    #[test]
    fn unreachable_goal_is_infinite_and_unsolvable() {
        let (d, mut t) = chain(2);
        t.goal = [crate::pddl::GroundAtom::new("key", &[])].into_iter().collect();
        let g = ground(&d, &t).unwrap();
        assert_eq!(h_add(&g.init, &g), INFINITE);
        assert_eq!(
            solve_satisficing(&g, &Deadline::unbounded()).verdict,
            Verdict::ProvedUnsolvable
        );
        assert_eq!(bfs_oracle(&g, 100).unwrap().verdict, Verdict::ProvedUnsolvable);
    }

    #[test]
    fn node_limit_and_expansion_cap() {
        let (d, t) = chain(30);
        let g = ground(&d, &t).unwrap();
        assert_eq!(bfs_oracle(&g, 5).unwrap().verdict, Verdict::NodeLimitExceeded);
        let capped = Deadline::unbounded().with_max_expansions(3);
        assert_eq!(solve_optimal(&g, &capped).verdict, Verdict::TimedOut);
    }

    #[test]
    fn outcome_json_record() {
        let (d, t) = chain(1);
        let g = ground(&d, &t).unwrap();
        let out = solve_satisficing(&g, &Deadline::after_secs(5.0));
        let v: serde_json::Value = serde_json::from_str(&out.to_json()).unwrap();
        assert_eq!(v["verdict"], "solved");
        assert_eq!(v["plan"][0]["action"], "go");
        assert!(v["expansions"].is_u64() && v["elapsed"].is_f64());
        let back: SearchOutcome = serde_json::from_str(&out.to_json()).unwrap();
        assert_eq!(back, out);
    }

    #[test]
    fn child_deadline_never_outlives_parent() {
        let parent = Deadline::after_secs(0.5);
        let child = parent.child(10.0);
        assert!(child.budget_secs().unwrap() <= 0.5);
        assert!(Deadline::unbounded().remaining_secs().is_infinite());
    }
}
