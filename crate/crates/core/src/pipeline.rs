//! Budgeted planning methods: planning on the full task, learned-importance
//! pruning with a threshold schedule, and the three-step procedure that adds
//! a relaxed "rough" plan and the complementary closure when pruning fails.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gnn::{self, GnnError, ModelParams};
use crate::mazenamo::{box_name, pos_name, Cell, MazeGrid, REFERENCE_WORK_RATE};
use crate::pddl::{ground_within, validate_plan, Domain, Plan, Task, Validation};
use crate::relax::{complementary_closure, entities_of_plan, relax, restrict_task, ImportanceSet};
use crate::scenegraph::{encode, SceneError};
use crate::search::{grounding_work, solve_satisficing, Clock, Deadline, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "pure")]
    Pure,
    #[serde(rename = "ploi")]
    Ploi,
    #[serde(rename = "ploi+comp")]
    PloiComp,
    #[serde(rename = "ploi+relax")]
    PloiRelax,
    #[serde(rename = "flax")]
    Flax,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Pure, Method::Ploi, Method::PloiComp, Method::PloiRelax, Method::Flax];

    pub fn name(self) -> &'static str {
        match self {
            Method::Pure => "pure",
            Method::Ploi => "ploi",
            Method::PloiComp => "ploi+comp",
            Method::PloiRelax => "ploi+relax",
            Method::Flax => "flax",
        }
    }

    pub fn parse(s: &str) -> Option<Method> {
        Method::ALL.into_iter().find(|m| m.name() == s)
    }

    pub fn needs_model(self) -> bool {
        self != Method::Pure
    }
}

/// Time source for a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum Timing {
    Wall,
    /// Deterministic work clock; see [`Clock::Work`].
    Work { per_second: f64 },
}

impl Timing {
    pub fn clock(self) -> Clock {
        match self {
            Timing::Wall => Clock::wall(),
            Timing::Work { per_second } => Clock::work(per_second),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct PipelineConfig {
    pub q_max: f64,
    pub gamma: f64,
    pub q_min: f64,
    pub budget_secs: f64,
    /// Share of the budget for the pruning loop of the three-step method.
    pub step1_fraction: f64,
    /// Share of the budget for the relaxed rough plan.
    pub step2_fraction: f64,
    /// First per-attempt cap is `max(attempt_floor_secs, attempt_fraction * budget)`;
    /// it doubles on each later attempt and never exceeds the remaining time.
    pub attempt_floor_secs: f64,
    pub attempt_fraction: f64,
    pub timing: Timing,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            q_max: 0.81,
            gamma: 0.9,
            q_min: 0.1,
            budget_secs: 5.0,
            step1_fraction: 0.2,
            step2_fraction: 0.2,
            attempt_floor_secs: 0.1,
            attempt_fraction: 0.1,
            timing: Timing::Work {
                per_second: REFERENCE_WORK_RATE,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error("invalid pipeline configuration: {0}")]
    Config(String),
    #[error("scoring failed: {0}")]
    Scoring(String),
}

impl From<GnnError> for PipelineError {
    fn from(e: GnnError) -> Self {
        PipelineError::Scoring(e.to_string())
    }
}

impl From<SceneError> for PipelineError {
    fn from(e: SceneError) -> Self {
        PipelineError::Scoring(e.to_string())
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: &str| Err(PipelineError::Config(m.into()));
        if !(0.0 < self.q_min && self.q_min < self.q_max && self.q_max < 1.0) {
            return bad("need 0 < qMin < qMax < 1");
        }
        if !(0.0 < self.gamma && self.gamma < 1.0) {
            return bad("need 0 < gamma < 1");
        }
        if !(self.budget_secs > 0.0 && self.budget_secs.is_finite()) {
            return bad("budget must be positive");
        }
        if !(self.step1_fraction > 0.0 && self.step2_fraction > 0.0 && self.step1_fraction + self.step2_fraction < 1.0) {
            return bad("step fractions must be positive and sum below 1");
        }
        if !(self.attempt_floor_secs > 0.0 && self.attempt_fraction > 0.0) {
            return bad("per-attempt cap must be positive");
        }
        if let Timing::Work { per_second } = self.timing {
            if !(per_second > 0.0 && per_second.is_finite()) {
                return bad("work rate must be positive");
            }
        }
        Ok(())
    }

    /// Thresholds `q_max * gamma^k` down to `q_min`, rounded to 12 decimals
    /// so that the schedule's values are exact decimal constants.
    pub fn threshold_schedule(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut k = 0;
        loop {
            let q = round12(self.q_max * self.gamma.powi(k));
            if q < self.q_min {
                return out;
            }
            out.push(q);
            k += 1;
        }
    }

    fn first_attempt_cap(&self) -> f64 {
        self.attempt_floor_secs.max(self.attempt_fraction * self.budget_secs)
    }
}

fn round12(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

/// Per-entity importance scores for a task.
pub trait Scorer {
    fn scores(&self, domain: &Domain, task: &Task) -> Result<BTreeMap<String, f64>, PipelineError>;
}

/// Scores from the trained graph network.
pub struct GnnScorer<'a>(pub &'a ModelParams);

impl Scorer for GnnScorer<'_> {
    fn scores(&self, domain: &Domain, task: &Task) -> Result<BTreeMap<String, f64>, PipelineError> {
        let g = encode(task, domain)?;
        let s = gnn::forward(self.0, &g)?;
        Ok(g.entities.into_iter().zip(s).collect())
    }
}

/// Fixed scores; entities not listed get `default`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FixedScores {
    pub scores: BTreeMap<String, f64>,
    pub default: f64,
}

impl Scorer for FixedScores {
    fn scores(&self, _: &Domain, task: &Task) -> Result<BTreeMap<String, f64>, PipelineError> {
        Ok(task
            .entities
            .iter()
            .map(|e| (e.name.clone(), self.scores.get(&e.name).copied().unwrap_or(self.default)))
            .collect())
    }
}

/// The last stage a run entered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Stage {
    /// Threshold loop over pruned tasks.
    Step1,
    /// Relaxed rough plan.
    Step2,
    /// Final solve on the expanded set.
    Step3,
    /// Planning on the complete task.
    Fallback,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttemptVerdict {
    Solved,
    ProvedUnsolvable,
    TimedOut,
    /// The plan failed validation on the original task.
    Invalid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Attempt {
    pub stage: Stage,
    pub threshold: Option<f64>,
    pub entities: usize,
    pub verdict: AttemptVerdict,
    pub expansions: u64,
    pub elapsed: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StepSets {
    pub o1: Option<ImportanceSet>,
    pub o2: Option<ImportanceSet>,
    pub o3: Option<ImportanceSet>,
}

impl StepSets {
    /// All three sets equal, for runs that succeed in the threshold loop.
    pub fn unchanged(o1: ImportanceSet) -> Self {
        StepSets {
            o1: Some(o1.clone()),
            o2: Some(o1.clone()),
            o3: Some(o1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PipelineResult {
    pub method: Method,
    pub instance: String,
    pub success: bool,
    pub plan: Option<Plan>,
    pub elapsed: f64,
    pub budget: f64,
    pub step_reached: Stage,
    pub threshold_trace: Vec<f64>,
    pub sets: StepSets,
    pub attempts: Vec<Attempt>,
}

impl PipelineResult {
    pub fn set_sizes(&self) -> [Option<usize>; 3] {
        [&self.sets.o1, &self.sets.o2, &self.sets.o3].map(|s| s.as_ref().map(ImportanceSet::len))
    }

    pub fn plan_length(&self) -> Option<usize> {
        self.plan.as_ref().map(Plan::len)
    }
}

struct Run<'a> {
    domain: &'a Domain,
    task: &'a Task,
    cfg: &'a PipelineConfig,
    deadline: Deadline,
    attempts: Vec<Attempt>,
    trace: Vec<f64>,
    stage: Stage,
}

impl<'a> Run<'a> {
    fn new(domain: &'a Domain, task: &'a Task, cfg: &'a PipelineConfig, stage: Stage) -> Self {
        Run {
            domain,
            task,
            cfg,
            deadline: Deadline::on(&cfg.timing.clock(), cfg.budget_secs),
            attempts: Vec::new(),
            trace: Vec::new(),
            stage,
        }
    }

    /// Grounds and searches `task` under `limit`; a found plan must validate
    /// on the original task.
    fn solve(&mut self, task: &Task, limit: &Deadline, threshold: Option<f64>) -> Option<Plan> {
        let started = limit.elapsed_secs();
        let record = |run: &mut Self, verdict, expansions| {
            run.attempts.push(Attempt {
                stage: run.stage,
                threshold,
                entities: task.entities.len(),
                verdict,
                expansions,
                elapsed: limit.elapsed_secs() - started,
            });
        };
        let problem = match ground_within(self.domain, task, || limit.expired()) {
            Ok(Some(p)) => p,
            Ok(None) => {
                record(self, AttemptVerdict::TimedOut, 0);
                return None;
            }
            Err(_) => {
                record(self, AttemptVerdict::ProvedUnsolvable, 0);
                return None;
            }
        };
        if !limit.charge_within(grounding_work(&problem)) {
            record(self, AttemptVerdict::TimedOut, 0);
            return None;
        }
        let out = solve_satisficing(&problem, limit);
        let verdict = match &out.verdict {
            Verdict::Solved(plan) => match validate_plan(self.domain, self.task, plan) {
                Ok(Validation::Valid) => {
                    record(self, AttemptVerdict::Solved, out.stats.expansions);
                    return Some(plan.clone());
                }
                _ => AttemptVerdict::Invalid,
            },
            Verdict::ProvedUnsolvable => AttemptVerdict::ProvedUnsolvable,
            Verdict::TimedOut | Verdict::NodeLimitExceeded => AttemptVerdict::TimedOut,
        };
        record(self, verdict, out.stats.expansions);
        None
    }

    fn solve_set(&mut self, set: &ImportanceSet, limit: &Deadline, threshold: Option<f64>) -> Option<Plan> {
        let restricted = restrict_task(self.task, set).expect("importance sets keep goal entities");
        self.solve(&restricted, limit, threshold)
    }

    /// Threshold loop within `limit`. Returns a plan with the set it was found
    /// on, or the last attempted set (the first set of the schedule when
    /// nothing could be attempted).
    fn prune_loop(
        &mut self,
        scores: &BTreeMap<String, f64>,
        limit: &Deadline,
    ) -> Result<(Plan, ImportanceSet), ImportanceSet> {
        self.stage = Stage::Step1;
        let mut last: Option<ImportanceSet> = None;
        let mut cap = self.cfg.first_attempt_cap();
        for q in self.cfg.threshold_schedule() {
            if limit.expired() {
                break;
            }
            self.trace.push(q);
            let set = ImportanceSet::for_task(
                self.task,
                scores.iter().filter(|(_, &s)| s >= q).map(|(e, _)| e.clone()),
            );
            if last.as_ref() == Some(&set) {
                continue;
            }
            let attempt = limit.child(cap);
            cap *= 2.0;
            if let Some(p) = self.solve_set(&set, &attempt, Some(q)) {
                return Ok((p, set));
            }
            last = Some(set);
        }
        Err(last.unwrap_or_else(|| {
            let q = self.cfg.q_max;
            ImportanceSet::for_task(self.task, scores.iter().filter(|(_, &s)| s >= q).map(|(e, _)| e.clone()))
        }))
    }

    /// Plans on the complete task with whatever time is left.
    fn fallback(&mut self) -> Option<Plan> {
        if self.deadline.expired() {
            return None;
        }
        self.stage = Stage::Fallback;
        let limit = self.deadline.child(f64::INFINITY);
        self.solve(self.task, &limit, None)
    }

    /// Rough plan on the relaxed original task within `limit`.
    fn rough_plan_entities(&mut self, limit: &Deadline) -> ImportanceSet {
        self.stage = Stage::Step2;
        let relaxed = relax(self.task);
        let started = limit.elapsed_secs();
        let Ok(Some(problem)) = ground_within(self.domain, &relaxed, || limit.expired()) else {
            self.attempts.push(Attempt {
                stage: Stage::Step2,
                threshold: None,
                entities: relaxed.entities.len(),
                verdict: AttemptVerdict::TimedOut,
                expansions: 0,
                elapsed: limit.elapsed_secs() - started,
            });
            return ImportanceSet::new();
        };
        limit.charge_within(grounding_work(&problem));
        let out = solve_satisficing(&problem, limit);
        let verdict = match out.verdict {
            Verdict::Solved(_) => AttemptVerdict::Solved,
            Verdict::ProvedUnsolvable => AttemptVerdict::ProvedUnsolvable,
            _ => AttemptVerdict::TimedOut,
        };
        self.attempts.push(Attempt {
            stage: Stage::Step2,
            threshold: None,
            entities: relaxed.entities.len(),
            verdict,
            expansions: out.stats.expansions,
            elapsed: limit.elapsed_secs() - started,
        });
        out.plan().map(entities_of_plan).unwrap_or_default()
    }

    fn finish(self, method: Method, plan: Option<Plan>, sets: StepSets) -> PipelineResult {
        PipelineResult {
            method,
            instance: self.task.name.clone(),
            success: plan.is_some(),
            plan,
            elapsed: self.deadline.elapsed_secs(),
            budget: self.cfg.budget_secs,
            step_reached: self.stage,
            threshold_trace: self.trace,
            sets,
            attempts: self.attempts,
        }
    }
}

/// Satisficing search on the complete task under the whole budget.
pub fn run_pure(domain: &Domain, task: &Task, cfg: &PipelineConfig) -> Result<PipelineResult, PipelineError> {
    cfg.validate()?;
    let mut run = Run::new(domain, task, cfg, Stage::Fallback);
    let plan = run.fallback();
    Ok(run.finish(Method::Pure, plan, StepSets::default()))
}

/// Threshold loop over the whole budget, then the complete task.
pub fn run_ploi(
    domain: &Domain,
    task: &Task,
    scorer: &dyn Scorer,
    cfg: &PipelineConfig,
) -> Result<PipelineResult, PipelineError> {
    cfg.validate()?;
    let mut run = Run::new(domain, task, cfg, Stage::Step1);
    let scores = scorer.scores(domain, task)?;
    let limit = run.deadline.child(f64::INFINITY);
    let (plan, o1) = match run.prune_loop(&scores, &limit) {
        Ok((p, set)) => (Some(p), set),
        Err(last) => (run.fallback(), last),
    };
    let sets = StepSets {
        o1: Some(o1),
        ..StepSets::default()
    };
    Ok(run.finish(Method::Ploi, plan, sets))
}

/// Threshold loop within the first two shares of the budget, then the
/// complementary closure of the last set, then the complete task.
pub fn run_ploi_comp(
    domain: &Domain,
    task: &Task,
    scorer: &dyn Scorer,
    cfg: &PipelineConfig,
) -> Result<PipelineResult, PipelineError> {
    cfg.validate()?;
    let mut run = Run::new(domain, task, cfg, Stage::Step1);
    let scores = scorer.scores(domain, task)?;
    let limit = run.deadline.child((cfg.step1_fraction + cfg.step2_fraction) * cfg.budget_secs);
    let o1 = match run.prune_loop(&scores, &limit) {
        Ok((p, o1)) => return Ok(run.finish(Method::PloiComp, Some(p), StepSets::unchanged(o1))),
        Err(last) => last,
    };
    let o3 = complementary_closure(task, &o1);
    let plan = expanded_solve(&mut run, &o1, &o3);
    let sets = StepSets {
        o1: Some(o1),
        o2: None,
        o3: Some(o3),
    };
    Ok(run.finish(Method::PloiComp, plan, sets))
}

/// Threshold loop within the first share, rough-plan merge within the
/// second, a solve on the merged set, then the complete task.
pub fn run_ploi_relax(
    domain: &Domain,
    task: &Task,
    scorer: &dyn Scorer,
    cfg: &PipelineConfig,
) -> Result<PipelineResult, PipelineError> {
    cfg.validate()?;
    let mut run = Run::new(domain, task, cfg, Stage::Step1);
    let scores = scorer.scores(domain, task)?;
    let limit = run.deadline.child(cfg.step1_fraction * cfg.budget_secs);
    let o1 = match run.prune_loop(&scores, &limit) {
        Ok((p, o1)) => return Ok(run.finish(Method::PloiRelax, Some(p), StepSets::unchanged(o1))),
        Err(last) => last,
    };
    let rough = run.deadline.child(cfg.step2_fraction * cfg.budget_secs);
    let o2 = o1.union(&run.rough_plan_entities(&rough));
    let plan = expanded_solve(&mut run, &o1, &o2);
    let sets = StepSets {
        o1: Some(o1),
        o2: Some(o2),
        o3: None,
    };
    Ok(run.finish(Method::PloiRelax, plan, sets))
}

/// Step 1 (threshold loop within the first share), Step 2 (rough plan on the
/// relaxed task within the second share), Step 3 (closure and a solve with
/// the remaining time), then the complete task if time is left.
pub fn run_flax(
    domain: &Domain,
    task: &Task,
    scorer: &dyn Scorer,
    cfg: &PipelineConfig,
) -> Result<PipelineResult, PipelineError> {
    cfg.validate()?;
    let mut run = Run::new(domain, task, cfg, Stage::Step1);
    let scores = scorer.scores(domain, task)?;
    let limit = run.deadline.child(cfg.step1_fraction * cfg.budget_secs);
    let o1 = match run.prune_loop(&scores, &limit) {
        Ok((p, o1)) => return Ok(run.finish(Method::Flax, Some(p), StepSets::unchanged(o1))),
        Err(last) => last,
    };
    let rough = run.deadline.child(cfg.step2_fraction * cfg.budget_secs);
    let o2 = o1.union(&run.rough_plan_entities(&rough));
    let o3 = complementary_closure(task, &o2);
    let plan = expanded_solve(&mut run, &o1, &o3);
    let sets = StepSets {
        o1: Some(o1),
        o2: Some(o2),
        o3: Some(o3),
    };
    Ok(run.finish(Method::Flax, plan, sets))
}

/// Solves the restriction to `expanded` (skipped when it equals `previous`
/// and that set was already proved unsolvable), then falls back to the
/// complete task.
fn expanded_solve(run: &mut Run, previous: &ImportanceSet, expanded: &ImportanceSet) -> Option<Plan> {
    if run.deadline.expired() {
        return None;
    }
    let proved = run
        .attempts
        .iter()
        .rev()
        .find(|a| a.stage == Stage::Step1)
        .is_some_and(|a| a.verdict == AttemptVerdict::ProvedUnsolvable);
    run.stage = Stage::Step3;
    if expanded != previous || !proved {
        let limit = run.deadline.child(f64::INFINITY);
        if let Some(p) = run.solve_set(expanded, &limit, None) {
            return Some(p);
        }
    }
    run.fallback()
}

/// A maze whose only route to the goal runs through one light-box cell that
/// the accompanying scores rank below every threshold. Pruning alone can never
/// solve it, the complete task is slow because of the surrounding box fields,
/// and the rough plan on the relaxed task passes through the blocked cell.
/// Returns the grid, the scores, the blocked cell and its box.
pub fn blocked_corridor_scenario() -> (MazeGrid, FixedScores, String, String) {
    const DRAWING: &str = "\
##########
#>.......#
#LLLLLLL.#
#LlLLlLL.#
#LLLLLLL.#
########L#
#LLLLLLL.#
#LLLlLLL.#
#G.......#
##########
";
    let grid = MazeGrid::from_ascii(DRAWING, 0).expect("scenario drawing is valid");
    let blocked = (5, 8);
    let mut scores = BTreeMap::new();
    for r in 0..grid.n {
        for c in 0..grid.n {
            if grid.cell((r, c)) == Cell::Free && (r, c) != blocked {
                scores.insert(pos_name((r, c)), 0.9);
            }
        }
    }
    let scorer = FixedScores { scores, default: 0.0 };
    (grid, scorer, pos_name(blocked), box_name(blocked))
}

/// Dispatches on `method`. `scorer` is ignored for [`Method::Pure`].
pub fn run_method(
    method: Method,
    domain: &Domain,
    task: &Task,
    scorer: &dyn Scorer,
    cfg: &PipelineConfig,
) -> Result<PipelineResult, PipelineError> {
    match method {
        Method::Pure => run_pure(domain, task, cfg),
        Method::Ploi => run_ploi(domain, task, scorer, cfg),
        Method::PloiComp => run_ploi_comp(domain, task, scorer, cfg),
        Method::PloiRelax => run_ploi_relax(domain, task, scorer, cfg),
        Method::Flax => run_flax(domain, task, scorer, cfg),
    }
}
