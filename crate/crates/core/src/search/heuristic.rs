//! Delete-relaxation estimates (additive and max) over a grounded problem.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::pddl::{GroundedProblem, State};

pub const INFINITE: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Combine {
    /// Cost of an action = 1 + sum of its precondition costs.
    Add,
    /// Cost of an action = 1 + max of its precondition costs.
    Max,
}

/// Precondition index plus scratch buffers; one per search.
pub struct RelaxedHeuristic<'p> {
    problem: &'p GroundedProblem,
    combine: Combine,
    /// Actions considered; those never reachable from the initial state are left out.
    actions: Vec<u32>,
    pre_of: Vec<Vec<u32>>,
    no_pre: Vec<u32>,
    cost: Vec<u64>,
    remaining: Vec<u32>,
    acc: Vec<u64>,
    heap: BinaryHeap<Reverse<(u64, u32)>>,
}

impl<'p> RelaxedHeuristic<'p> {
    pub fn new(problem: &'p GroundedProblem, combine: Combine) -> Self {
        Self::with_actions(problem, combine, (0..problem.actions.len() as u32).collect())
    }

    pub fn with_actions(problem: &'p GroundedProblem, combine: Combine, actions: Vec<u32>) -> Self {
        let mut pre_of = vec![Vec::new(); problem.num_atoms()];
        let mut no_pre = Vec::new();
        for &a in &actions {
            let pre = &problem.actions[a as usize].pre;
            if pre.is_empty() {
                no_pre.push(a);
            }
            for &p in pre {
                pre_of[p as usize].push(a);
            }
        }
        let n_actions = problem.actions.len();
        RelaxedHeuristic {
            problem,
            combine,
            actions,
            pre_of,
            no_pre,
            cost: vec![INFINITE; problem.num_atoms()],
            remaining: vec![0; n_actions],
            acc: vec![0; n_actions],
            heap: BinaryHeap::new(),
        }
    }

    /// Estimated cost to reach the goal from `state`, or [`INFINITE`] when the
    /// goal is unreachable even ignoring delete effects.
    pub fn evaluate(&mut self, state: &State) -> u64 {
        let problem = self.problem;
        if problem.is_goal(state) {
            return 0;
        }
        self.cost.fill(INFINITE);
        for &a in &self.actions {
            self.remaining[a as usize] = problem.actions[a as usize].pre.len() as u32;
            self.acc[a as usize] = 0;
        }
        self.heap.clear();
        for atom in state.iter() {
            self.cost[atom as usize] = 0;
            self.heap.push(Reverse((0, atom)));
        }
        for i in 0..self.no_pre.len() {
            let a = self.no_pre[i];
            self.fire(a, 1);
        }
        let mut goals_left = problem.goal.iter().filter(|&&g| !state.contains(g)).count();
        while let Some(Reverse((c, atom))) = self.heap.pop() {
            if c > self.cost[atom as usize] {
                continue;
            }
            if problem.goal.binary_search(&atom).is_ok() && c > 0 {
                goals_left -= 1;
                if goals_left == 0 {
                    break;
                }
            }
            for i in 0..self.pre_of[atom as usize].len() {
                let a = self.pre_of[atom as usize][i] as usize;
                self.acc[a] = match self.combine {
                    Combine::Add => self.acc[a].saturating_add(c),
                    Combine::Max => self.acc[a].max(c),
                };
                self.remaining[a] -= 1;
                if self.remaining[a] == 0 {
                    let action_cost = self.acc[a].saturating_add(1);
                    self.fire(a as u32, action_cost);
                }
            }
        }
        let mut total = 0u64;
        for &g in &problem.goal {
            let c = self.cost[g as usize];
            if c == INFINITE {
                return INFINITE;
            }
            total = match self.combine {
                Combine::Add => total.saturating_add(c),
                Combine::Max => total.max(c),
            };
        }
        total
    }

    fn fire(&mut self, action: u32, action_cost: u64) {
        for &p in &self.problem.actions[action as usize].add {
            if action_cost < self.cost[p as usize] {
                self.cost[p as usize] = action_cost;
                self.heap.push(Reverse((action_cost, p)));
            }
        }
    }
}

/// Actions whose preconditions are reachable from the initial state when
/// delete effects are ignored. No other action can ever be applicable.
pub fn relaxed_reachable_actions(problem: &GroundedProblem) -> Vec<u32> {
    let mut reached = problem.init.clone();
    let mut remaining: Vec<usize> = problem.actions.iter().map(|a| a.pre.len()).collect();
    let mut pre_of = vec![Vec::new(); problem.num_atoms()];
    for (i, a) in problem.actions.iter().enumerate() {
        for &p in &a.pre {
            pre_of[p as usize].push(i);
        }
    }
    let mut queue: Vec<u32> = reached.iter().collect();
    let mut fired = vec![false; problem.actions.len()];
    let trigger = |a: usize, reached: &mut State, queue: &mut Vec<u32>, fired: &mut Vec<bool>| {
        fired[a] = true;
        for &p in &problem.actions[a].add {
            if !reached.contains(p) {
                reached.insert(p);
                queue.push(p);
            }
        }
    };
    for a in 0..problem.actions.len() {
        if remaining[a] == 0 {
            trigger(a, &mut reached, &mut queue, &mut fired);
        }
    }
    while let Some(p) = queue.pop() {
        for &a in &pre_of[p as usize] {
            remaining[a] -= 1;
            if remaining[a] == 0 {
                trigger(a, &mut reached, &mut queue, &mut fired);
            }
        }
    }
    (0..problem.actions.len() as u32)
        .filter(|&a| fired[a as usize])
        .collect()
}
