//! Evaluation harness: runs methods over a dataset manifest and aggregates
//! success rate (SR) and weighted planning time (WPT, failures charged the
//! full budget).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gnn::{self, ModelParams};
use crate::mazenamo::{mazenamo_domain, Level, Manifest, ManifestEntry, MazeError};
use crate::pddl::{validate_plan, Domain, Plan, Task, Validation};
use crate::pipeline::{run_method, GnnScorer, Method, PipelineConfig, PipelineResult, Scorer, Stage, Timing};

/// Runs whose elapsed time is this close to the budget (as a fraction of it)
/// are flagged as boundary-sensitive.
pub const BOUNDARY_FRACTION: f64 = 0.05;

/// Allowed overrun of the budget before a run counts as a violation.
pub const BUDGET_SLACK_SECS: f64 = 0.05;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("no runs to aggregate")]
    EmptyRuns,
    #[error("invalid suite configuration: {0}")]
    Config(String),
    #[error("model: {0}")]
    Model(String),
    #[error(transparent)]
    Dataset(#[from] MazeError),
    #[error("instance {id}: {message}")]
    Instance { id: String, message: String },
    #[error("io: {0}")]
    Io(String),
    #[error("bad report: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub runs: usize,
    pub sr: f64,
    /// Seconds.
    pub wpt: f64,
}

/// SR and WPT of `(success, elapsed)` pairs sharing `budget`. Successful
/// elapsed times are clamped to the budget.
pub fn metrics_of(outcomes: &[(bool, f64)], budget: f64) -> Result<Metrics, BenchError> {
    if outcomes.is_empty() {
        return Err(BenchError::EmptyRuns);
    }
    let n = outcomes.len() as f64;
    let solved = outcomes.iter().filter(|o| o.0).count() as f64;
    let time: f64 = outcomes
        .iter()
        .map(|&(ok, t)| if ok { t.min(budget) } else { budget })
        .sum();
    Ok(Metrics {
        runs: outcomes.len(),
        sr: solved / n,
        wpt: time / n,
    })
}

pub fn compute_metrics(runs: &[PipelineResult], budget: f64) -> Result<Metrics, BenchError> {
    let outcomes: Vec<(bool, f64)> = runs.iter().map(|r| (r.success, r.elapsed)).collect();
    metrics_of(&outcomes, budget)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct SuiteConfig {
    pub manifest: PathBuf,
    pub methods: Vec<Method>,
    /// Budget per maze size; sizes not listed use the manifest's budget.
    pub budgets: BTreeMap<usize, f64>,
    pub seeds: Vec<u64>,
    pub model: Option<PathBuf>,
    /// Worker threads; 0 picks one less than the available cores.
    pub parallelism: usize,
    /// Pipeline knobs; its budget is replaced per instance.
    pub pipeline: PipelineConfig,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            manifest: PathBuf::from("manifest.json"),
            methods: Method::ALL.to_vec(),
            budgets: [(10, 5.0), (12, 20.0), (15, 40.0)].into(),
            seeds: vec![0, 1, 2],
            model: None,
            parallelism: 0,
            pipeline: PipelineConfig::default(),
        }
    }
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<(), BenchError> {
        if self.seeds.is_empty() {
            return Err(BenchError::Config("seeds must not be empty".into()));
        }
        if self.methods.is_empty() {
            return Err(BenchError::Config("methods must not be empty".into()));
        }
        if let Some((n, b)) = self.budgets.iter().find(|(_, b)| !(**b > 0.0 && b.is_finite())) {
            return Err(BenchError::Config(format!("budget for size {n} must be positive, got {b}")));
        }
        self.pipeline
            .validate()
            .map_err(|e| BenchError::Config(e.to_string()))
    }

    pub fn workers(&self) -> usize {
        if self.parallelism > 0 {
            return self.parallelism;
        }
        default_parallelism()
    }

    fn budget_for(&self, entry: &ManifestEntry) -> f64 {
        self.budgets
            .get(&entry.record.n)
            .copied()
            .unwrap_or(entry.budget_secs)
    }
}

/// Available cores minus one, at least one.
pub fn default_parallelism() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get().saturating_sub(1))
        .unwrap_or(1)
        .max(1)
}

/// One benchmark instance ready to plan on.
#[derive(Debug, Clone)]
pub struct SuiteInstance {
    pub id: String,
    pub n: usize,
    pub level: Level,
    pub budget: f64,
    pub task: Task,
}

/// Loads every leveled instance of a manifest.
pub fn load_instances(manifest_path: &Path, cfg: &SuiteConfig) -> Result<Vec<SuiteInstance>, BenchError> {
    let manifest = Manifest::load(manifest_path)?;
    let mut out = Vec::new();
    for entry in &manifest.instances {
        let Some(level) = entry.level() else { continue };
        let mut task = entry.record.to_grid()?.to_task();
        task.name = entry.record.id.clone();
        out.push(SuiteInstance {
            id: entry.record.id.clone(),
            n: entry.record.n,
            level,
            budget: cfg.budget_for(entry),
            task,
        });
    }
    Ok(out)
}

/// Per-run record, as persisted in `runs.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunRecord {
    pub instance: String,
    pub n: usize,
    pub level: Level,
    pub method: Method,
    pub seed: u64,
    pub budget: f64,
    pub success: bool,
    /// Seconds, millisecond resolution.
    pub elapsed: f64,
    pub step_reached: Stage,
    pub threshold_trace: Vec<f64>,
    pub set_sizes: [Option<usize>; 3],
    /// The recorded entity sets grow step by step.
    pub sets_nested: bool,
    pub plan_length: Option<usize>,
    /// Harness re-validation of the plan on the original task.
    pub plan_valid: Option<bool>,
    pub boundary_sensitive: bool,
    pub plan: Option<Plan>,
}

impl RunRecord {
    fn from_result(inst: &SuiteInstance, seed: u64, r: PipelineResult, domain: &Domain) -> RunRecord {
        let plan_valid = r
            .plan
            .as_ref()
            .map(|p| matches!(validate_plan(domain, &inst.task, p), Ok(Validation::Valid)));
        RunRecord {
            instance: inst.id.clone(),
            n: inst.n,
            level: inst.level,
            method: r.method,
            seed,
            budget: inst.budget,
            success: r.success,
            elapsed: (r.elapsed * 1000.0).round() / 1000.0,
            step_reached: r.step_reached,
            threshold_trace: r.threshold_trace.clone(),
            set_sizes: r.set_sizes(),
            sets_nested: nested_sets(&r),
            plan_length: r.plan_length(),
            plan_valid,
            boundary_sensitive: (r.elapsed - inst.budget).abs() <= BOUNDARY_FRACTION * inst.budget,
            plan: r.plan,
        }
    }

    /// Invariant breaches of this run, as human-readable messages.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let tag = format!("{} {} seed {}", self.instance, self.method.name(), self.seed);
        if self.success && self.plan_valid != Some(true) {
            out.push(format!("{tag}: success without a valid plan"));
        }
        if self.elapsed > self.budget + BUDGET_SLACK_SECS {
            out.push(format!("{tag}: elapsed {} exceeds budget {}", self.elapsed, self.budget));
        }
        if !self.sets_nested {
            out.push(format!("{tag}: entity sets are not nested {:?}", self.set_sizes));
        }
        out
    }
}

/// Whether the entity sets a run recorded are nested.
fn nested_sets(r: &PipelineResult) -> bool {
    match (&r.sets.o1, &r.sets.o2, &r.sets.o3) {
        (Some(a), Some(b), Some(c)) => a.is_subset(b) && b.is_subset(c),
        (Some(a), Some(b), None) | (Some(a), None, Some(b)) => a.is_subset(b),
        _ => true,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ReportRow {
    pub n: usize,
    pub level: Level,
    pub method: Method,
    pub runs: usize,
    pub sr: f64,
    pub wpt: f64,
    pub budget: f64,
    /// WPT as a percentage of the budget.
    pub wpt_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AverageRow {
    pub method: Method,
    /// Mean of the per-(size, level) SR values.
    pub sr: f64,
    /// Mean of the per-(size, level) WPT percentages.
    pub wpt_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ReportHeader {
    pub methods: Vec<Method>,
    pub seeds: Vec<u64>,
    pub budgets: BTreeMap<usize, f64>,
    pub pipeline: PipelineConfig,
    pub parallelism: usize,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BenchReport {
    pub header: ReportHeader,
    pub rows: Vec<ReportRow>,
    pub averages: Vec<AverageRow>,
    pub violations: Vec<String>,
    pub runs: Vec<RunRecord>,
}

impl BenchReport {
    pub fn row(&self, n: usize, level: Level, method: Method) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.n == n && r.level == level && r.method == method)
    }

    /// Pooled metrics of `method` over the runs whose level is in `levels`.
    pub fn pooled(&self, method: Method, levels: &[Level]) -> Result<Metrics, BenchError> {
        let picked: Vec<&RunRecord> = self
            .runs
            .iter()
            .filter(|r| r.method == method && levels.contains(&r.level))
            .collect();
        let Some(first) = picked.first() else { return Err(BenchError::EmptyRuns) };
        if picked.iter().any(|r| r.budget != first.budget) {
            return Err(BenchError::Config("pooled runs have different budgets".into()));
        }
        let outcomes: Vec<(bool, f64)> = picked.iter().map(|r| (r.success, r.elapsed)).collect();
        metrics_of(&outcomes, first.budget)
    }
}

const SEED_NOTE: &str = "instances are fixed by the manifest; seeds repeat each (instance, method) run \
and only affect timing noise, since thresholds and search are deterministic";

/// Folds per-run records into the per-(size, level, method) table.
pub fn aggregate(header: ReportHeader, runs: Vec<RunRecord>) -> Result<BenchReport, BenchError> {
    if runs.is_empty() {
        return Err(BenchError::EmptyRuns);
    }
    let mut groups: BTreeMap<(usize, Level, Method), Vec<&RunRecord>> = BTreeMap::new();
    for r in &runs {
        groups.entry((r.n, r.level, r.method)).or_default().push(r);
    }
    let mut rows = Vec::new();
    for ((n, level, method), group) in &groups {
        let budget = group[0].budget;
        let outcomes: Vec<(bool, f64)> = group.iter().map(|r| (r.success, r.elapsed)).collect();
        let m = metrics_of(&outcomes, budget)?;
        rows.push(ReportRow {
            n: *n,
            level: *level,
            method: *method,
            runs: m.runs,
            sr: m.sr,
            wpt: m.wpt,
            budget,
            wpt_pct: 100.0 * m.wpt / budget,
        });
    }
    let averages = header
        .methods
        .iter()
        .filter_map(|&method| {
            let mine: Vec<&ReportRow> = rows.iter().filter(|r| r.method == method).collect();
            (!mine.is_empty()).then(|| AverageRow {
                method,
                sr: mine.iter().map(|r| r.sr).sum::<f64>() / mine.len() as f64,
                wpt_pct: mine.iter().map(|r| r.wpt_pct).sum::<f64>() / mine.len() as f64,
            })
        })
        .collect();
    let violations = runs.iter().flat_map(RunRecord::violations).collect();
    Ok(BenchReport {
        header,
        rows,
        averages,
        violations,
        runs,
    })
}

/// Runs every (instance, method, seed) job with `scorer` and aggregates.
pub fn run_instances(
    instances: &[SuiteInstance],
    scorer: &(dyn Scorer + Sync),
    cfg: &SuiteConfig,
) -> Result<BenchReport, BenchError> {
    cfg.validate()?;
    if instances.is_empty() {
        return Err(BenchError::EmptyRuns);
    }
    let domain = mazenamo_domain();
    let jobs: Vec<(&SuiteInstance, Method, u64)> = instances
        .iter()
        .flat_map(|i| cfg.methods.iter().flat_map(move |&m| cfg.seeds.iter().map(move |&s| (i, m, s))))
        .collect();
    let run_job = |&(inst, method, seed): &(&SuiteInstance, Method, u64)| -> Result<RunRecord, BenchError> {
        let pcfg = PipelineConfig {
            budget_secs: inst.budget,
            ..cfg.pipeline.clone()
        };
        let r = run_method(method, &domain, &inst.task, scorer, &pcfg).map_err(|e| BenchError::Instance {
            id: inst.id.clone(),
            message: e.to_string(),
        })?;
        Ok(RunRecord::from_result(inst, seed, r, &domain))
    };
    let workers = cfg.workers();
    let runs: Result<Vec<RunRecord>, BenchError> = if workers == 1 {
        jobs.iter().map(run_job).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| BenchError::Config(e.to_string()))?;
        pool.install(|| jobs.par_iter().map(run_job).collect())
    };
    let header = ReportHeader {
        methods: cfg.methods.clone(),
        seeds: cfg.seeds.clone(),
        budgets: cfg.budgets.clone(),
        pipeline: cfg.pipeline.clone(),
        parallelism: workers,
        note: SEED_NOTE.into(),
    };
    aggregate(header, runs?)
}

/// Loads the manifest and model named in `cfg` and runs the suite.
pub fn run_suite(cfg: &SuiteConfig) -> Result<BenchReport, BenchError> {
    cfg.validate()?;
    let instances = load_instances(&cfg.manifest, cfg)?;
    let params = if cfg.methods.iter().any(|m| m.needs_model()) {
        let path = cfg
            .model
            .as_ref()
            .ok_or_else(|| BenchError::Model("a learned method was requested without a model path".into()))?;
        gnn::load(path).map_err(|e| BenchError::Model(format!("{}: {e}", path.display())))?
    } else {
        ModelParams::init(0)
    };
    run_instances(&instances, &GnnScorer(&params), cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
    /// One run record per line.
    Jsonl,
}

impl ReportFormat {
    pub fn parse(s: &str) -> Option<ReportFormat> {
        match s {
            "json" => Some(ReportFormat::Json),
            "csv" => Some(ReportFormat::Csv),
            "md" | "markdown" => Some(ReportFormat::Markdown),
            "jsonl" => Some(ReportFormat::Jsonl),
            _ => None,
        }
    }
}

pub fn emit_report(report: &BenchReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => serde_json::to_string_pretty(report).expect("serializable") + "\n",
        ReportFormat::Jsonl => report
            .runs
            .iter()
            .map(|r| serde_json::to_string(r).expect("serializable") + "\n")
            .collect(),
        ReportFormat::Csv => emit_csv(report),
        ReportFormat::Markdown => emit_markdown(report),
    }
}

pub fn parse_report(json: &str) -> Result<BenchReport, BenchError> {
    serde_json::from_str(json).map_err(|e| BenchError::Format(e.to_string()))
}

pub fn parse_runs_jsonl(text: &str) -> Result<Vec<RunRecord>, BenchError> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| BenchError::Format(e.to_string())))
        .collect()
}

fn emit_csv(report: &BenchReport) -> String {
    let mut out = String::from(
        "instance,n,level,method,seed,budget,success,elapsed,stepReached,thresholds,o1,o2,o3,planLength,planValid,boundarySensitive\n",
    );
    let opt = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in &report.runs {
        let trace: Vec<String> = r.threshold_trace.iter().map(|q| q.to_string()).collect();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{:.3},{},{},{},{},{},{},{},{}",
            r.instance,
            r.n,
            r.level.name(),
            r.method.name(),
            r.seed,
            r.budget,
            r.success,
            r.elapsed,
            serde_json::to_value(r.step_reached).unwrap().as_str().unwrap(),
            trace.join(";"),
            opt(r.set_sizes[0]),
            opt(r.set_sizes[1]),
            opt(r.set_sizes[2]),
            opt(r.plan_length),
            r.plan_valid.map(|v| v.to_string()).unwrap_or_default(),
            r.boundary_sensitive,
        );
    }
    out
}

/// Signed relative change `(new - old) / old` as a percentage string.
pub fn relative_change(new: f64, old: f64) -> String {
    if old == 0.0 {
        return "n/a".into();
    }
    format!("{:+.2}%", 100.0 * (new - old) / old)
}

fn title(level: Level) -> String {
    let name = level.name();
    name[..1].to_uppercase() + &name[1..]
}

fn emit_markdown(report: &BenchReport) -> String {
    let methods = &report.header.methods;
    let improv = methods.contains(&Method::Ploi) && methods.contains(&Method::Flax);
    let mut out = String::new();
    let _ = writeln!(out, "Seeds: {:?}. {}.", report.header.seeds, SEED_NOTE);
    let _ = writeln!(
        out,
        "Budget shares: step 1 {}, step 2 {}; timing: {}.\n",
        report.header.pipeline.step1_fraction,
        report.header.pipeline.step2_fraction,
        match report.header.pipeline.timing {
            Timing::Wall => "wall clock".to_string(),
            Timing::Work { per_second } => format!("work clock at {per_second} units/s"),
        }
    );
    out.push_str("| Task |");
    for m in methods {
        let _ = write!(out, " {0} SR | {0} WPT (s) |", m.name());
    }
    if improv {
        out.push_str(" Improv. SR | Improv. WPT |");
    }
    out.push_str("\n|---|");
    for _ in methods {
        out.push_str("---|---|");
    }
    if improv {
        out.push_str("---|---|");
    }
    out.push('\n');

    let mut tasks: Vec<(usize, Level)> = report.rows.iter().map(|r| (r.n, r.level)).collect();
    tasks.dedup();
    for (n, level) in tasks {
        let _ = write!(out, "| {n} ({}) |", title(level));
        for &m in methods {
            match report.row(n, level, m) {
                Some(r) => {
                    let _ = write!(out, " {:.3} | {:.2} |", r.sr, r.wpt);
                }
                None => out.push_str(" - | - |"),
            }
        }
        if improv {
            match (report.row(n, level, Method::Flax), report.row(n, level, Method::Ploi)) {
                (Some(f), Some(p)) => {
                    let _ = write!(out, " {} | {} |", relative_change(f.sr, p.sr), relative_change(f.wpt, p.wpt));
                }
                _ => out.push_str(" - | - |"),
            }
        }
        out.push('\n');
    }
    out.push_str("| Average |");
    let avg = |m: Method| report.averages.iter().find(|a| a.method == m);
    for &m in methods {
        match avg(m) {
            Some(a) => {
                let _ = write!(out, " {:.3} | {:.2}% |", a.sr, a.wpt_pct);
            }
            None => out.push_str(" - | - |"),
        }
    }
    if improv {
        match (avg(Method::Flax), avg(Method::Ploi)) {
            (Some(f), Some(p)) => {
                let _ = write!(out, " {} | {} |", relative_change(f.sr, p.sr), relative_change(f.wpt_pct, p.wpt_pct));
            }
            _ => out.push_str(" - | - |"),
        }
    }
    out.push('\n');
    if !report.violations.is_empty() {
        let _ = writeln!(out, "\nInvariant violations: {}", report.violations.len());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mazenamo::MazeGrid;
    use crate::pipeline::FixedScores;
    use crate::search::DEFAULT_WORK_RATE;

    fn approx(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn metrics_follow_the_definitions() {
        let m = metrics_of(&[(true, 1.0), (false, 2.0)], 5.0).unwrap();
        assert!(approx(m.sr, 0.5) && approx(m.wpt, 3.0));
        let m = metrics_of(&[(false, 0.3), (false, 5.0)], 5.0).unwrap();
        assert!(approx(m.sr, 0.0) && approx(m.wpt, 5.0));
        let m = metrics_of(&[(true, 0.0), (true, 0.0)], 5.0).unwrap();
        assert!(approx(m.sr, 1.0) && approx(m.wpt, 0.0));
        assert!(matches!(metrics_of(&[], 5.0), Err(BenchError::EmptyRuns)));
        assert!(matches!(compute_metrics(&[], 5.0), Err(BenchError::EmptyRuns)));
    }

    #[test]
    fn relative_change_is_a_signed_percentage() {
        assert_eq!(relative_change(0.959, 0.929), "+3.23%");
        assert_eq!(relative_change(1.08, 1.37), "-21.17%");
        assert_eq!(relative_change(1.0, 0.0), "n/a");
    }

    fn instances() -> Vec<SuiteInstance> {
        ["#####\n#>..#\n#...#\n#..G#\n#####", "#####\n#v..#\n#.L.#\n#.G.#\n#####"]
            .iter()
            .enumerate()
            .map(|(i, d)| SuiteInstance {
                id: format!("t{i}"),
                n: 5,
                level: Level::Easy,
                budget: 5.0,
                task: MazeGrid::from_ascii(d, 0).unwrap().to_task(),
            })
            .collect()
    }

    fn cfg(methods: Vec<Method>) -> SuiteConfig {
        SuiteConfig {
            methods,
            seeds: vec![0, 1],
            parallelism: 1,
            pipeline: PipelineConfig {
                timing: Timing::Work {
                    per_second: DEFAULT_WORK_RATE,
                },
                ..PipelineConfig::default()
            },
            ..SuiteConfig::default()
        }
    }

    #[test]
    fn pure_on_trivial_instances_has_full_success() {
        let report = run_instances(&instances(), &FixedScores::default(), &cfg(vec![Method::Pure])).unwrap();
        assert_eq!(report.runs.len(), 4);
        assert_eq!(report.rows.len(), 1);
        assert_eq!(report.rows[0].sr, 1.0);
        assert!(report.violations.is_empty());
        assert!(report.rows[0].wpt <= report.rows[0].budget);
        let md = emit_report(&report, ReportFormat::Markdown);
        assert!(md.contains("| 5 (Easy) | 1.000 |"), "{md}");
        assert!(md.contains("| Average | 1.000 |"), "{md}");
    }

    #[test]
    fn reports_round_trip_and_are_reproducible() {
        let scorer = FixedScores {
            scores: BTreeMap::new(),
            default: 0.5,
        };
        let c = cfg(vec![Method::Ploi, Method::Flax]);
        let a = run_instances(&instances(), &scorer, &c).unwrap();
        let b = run_instances(&instances(), &scorer, &c).unwrap();
        assert_eq!(emit_report(&a, ReportFormat::Json), emit_report(&b, ReportFormat::Json));
        assert_eq!(parse_report(&emit_report(&a, ReportFormat::Json)).unwrap(), a);
        assert_eq!(parse_runs_jsonl(&emit_report(&a, ReportFormat::Jsonl)).unwrap(), a.runs);
        let again = aggregate(a.header.clone(), a.runs.clone()).unwrap();
        assert_eq!(again, a);
        let md = emit_report(&a, ReportFormat::Markdown);
        assert!(md.contains("Improv. SR"));
        let csv = emit_report(&a, ReportFormat::Csv);
        assert_eq!(csv.lines().count(), 1 + a.runs.len());
    }

    #[test]
    fn violations_are_detected() {
        let mut r = run_instances(&instances()[..1], &FixedScores::default(), &cfg(vec![Method::Pure]))
            .unwrap()
            .runs
            .remove(0);
        assert!(r.violations().is_empty());
        r.plan_valid = Some(false);
        r.elapsed = r.budget + 1.0;
        r.sets_nested = false;
        assert_eq!(r.violations().len(), 3);
    }

    #[test]
    fn config_is_checked() {
        let mut c = SuiteConfig::default();
        c.seeds.clear();
        assert!(matches!(c.validate(), Err(BenchError::Config(_))));
        let mut c = SuiteConfig::default();
        c.budgets.insert(10, 0.0);
        assert!(matches!(c.validate(), Err(BenchError::Config(_))));
        assert!(default_parallelism() >= 1);
    }
}
