//! Difficulty classification and dataset construction.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::grid::{generate, GenConfig, InstanceRecord};
use super::{mazenamo_domain, MazeError};
use crate::pddl::{emit_task, ground_within, Task};
use crate::search::{grounding_work, solve_satisficing, Clock, Deadline, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Easy,
    Medium,
    Hard,
    Expert,
}

impl Level {
    pub const ALL: [Level; 4] = [Level::Easy, Level::Medium, Level::Hard, Level::Expert];

    pub fn name(self) -> &'static str {
        match self {
            Level::Easy => "easy",
            Level::Medium => "medium",
            Level::Hard => "hard",
            Level::Expert => "expert",
        }
    }

    pub fn parse(s: &str) -> Option<Level> {
        Level::ALL.into_iter().find(|l| l.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiscardReason {
    Unsolvable,
    Trivial,
    TooHard,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DifficultyLevel {
    Kept(Level),
    Discarded(DiscardReason),
}

/// Level cut-offs. `trivial_secs` is absolute; the others are fractions of
/// the evaluation budget (upper bounds, exclusive; expert runs to the budget).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Thresholds {
    pub trivial_secs: f64,
    pub easy: f64,
    pub medium: f64,
    pub hard: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            trivial_secs: 0.1,
            easy: 0.10,
            medium: 0.25,
            hard: 0.60,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<(), MazeError> {
        if !(0.0 < self.easy && self.easy < self.medium && self.medium < self.hard && self.hard < 1.0)
            || self.trivial_secs < 0.0
        {
            return Err(MazeError::Config(format!("thresholds must be strictly increasing in (0, 1): {self:?}")));
        }
        Ok(())
    }
}

/// How classification measures solve time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum TimeMetric {
    /// Monotonic wall clock (grounding plus search).
    WallClock,
    /// Deterministic work clock advancing `per_second` units per pseudo-second.
    Work { per_second: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ClassifyConfig {
    pub budget_secs: f64,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default = "wall_clock")]
    pub metric: TimeMetric,
}

fn wall_clock() -> TimeMetric {
    TimeMetric::WallClock
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Classification {
    pub level: DifficultyLevel,
    pub solve_time_sec: f64,
}

/// How the reference planner ended, for [`level_for`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefOutcome {
    Solved,
    Unsolvable,
    TimedOut,
}

/// Maps a reference-planner result to a level.
pub fn level_for(outcome: RefOutcome, solve_time: f64, budget: f64, t: &Thresholds) -> DifficultyLevel {
    match outcome {
        RefOutcome::Unsolvable => DifficultyLevel::Discarded(DiscardReason::Unsolvable),
        RefOutcome::TimedOut => DifficultyLevel::Discarded(DiscardReason::TooHard),
        RefOutcome::Solved if solve_time > budget => DifficultyLevel::Discarded(DiscardReason::TooHard),
        RefOutcome::Solved if solve_time < t.trivial_secs => DifficultyLevel::Discarded(DiscardReason::Trivial),
        RefOutcome::Solved => {
            let frac = solve_time / budget;
            DifficultyLevel::Kept(if frac < t.easy {
                Level::Easy
            } else if frac < t.medium {
                Level::Medium
            } else if frac < t.hard {
                Level::Hard
            } else {
                Level::Expert
            })
        }
    }
}

/// Runs the satisficing planner on `task` under the configured budget and
/// classifies the instance by its solve time.
pub fn classify_difficulty(task: &Task, cfg: &ClassifyConfig) -> Result<Classification, MazeError> {
    cfg.thresholds.validate()?;
    let (outcome, time) = reference_run(task, cfg.metric, cfg.budget_secs)?;
    Ok(Classification {
        level: level_for(outcome, time, cfg.budget_secs, &cfg.thresholds),
        solve_time_sec: time,
    })
}

/// Grounding plus satisficing search within `limit_secs`.
fn reference_run(task: &Task, metric: TimeMetric, limit_secs: f64) -> Result<(RefOutcome, f64), MazeError> {
    let domain = mazenamo_domain();
    Ok(match metric {
        TimeMetric::WallClock => {
            let started = Instant::now();
            let deadline = Deadline::after_secs(limit_secs);
            match ground_within(&domain, task, || deadline.expired())? {
                None => (RefOutcome::TimedOut, started.elapsed().as_secs_f64()),
                Some(problem) => {
                    let out = solve_satisficing(&problem, &deadline);
                    (ref_outcome(&out.verdict), started.elapsed().as_secs_f64())
                }
            }
        }
        TimeMetric::Work { per_second } => {
            let clock = Clock::work(per_second);
            let deadline = Deadline::on(&clock, limit_secs);
            let problem = ground_within(&domain, task, || false)?.expect("unbounded grounding");
            let out = if deadline.charge_within(grounding_work(&problem)) {
                ref_outcome(&solve_satisficing(&problem, &deadline).verdict)
            } else {
                RefOutcome::TimedOut
            };
            (out, deadline.elapsed_secs())
        }
    })
}

fn ref_outcome(v: &Verdict) -> RefOutcome {
    match v {
        Verdict::Solved(_) => RefOutcome::Solved,
        Verdict::ProvedUnsolvable => RefOutcome::Unsolvable,
        Verdict::TimedOut | Verdict::NodeLimitExceeded => RefOutcome::TimedOut,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quotas {
    #[serde(default)]
    pub easy: usize,
    #[serde(default)]
    pub medium: usize,
    #[serde(default)]
    pub hard: usize,
    #[serde(default)]
    pub expert: usize,
}

impl Quotas {
    pub fn get(&self, l: Level) -> usize {
        match l {
            Level::Easy => self.easy,
            Level::Medium => self.medium,
            Level::Hard => self.hard,
            Level::Expert => self.expert,
        }
    }

    pub fn total(&self) -> usize {
        Level::ALL.iter().map(|&l| self.get(l)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SizeSpec {
    pub n: usize,
    pub budget_secs: f64,
    pub quotas: Quotas,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DatasetConfig {
    /// Label recorded in the manifest, e.g. `test` or `train`.
    pub split: String,
    pub sizes: Vec<SizeSpec>,
    pub base_seed: u64,
    /// Generated instances tried per size before giving up.
    pub max_attempts: usize,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default = "wall_clock")]
    pub metric: TimeMetric,
    /// Generator overrides; `n` and `seed` are replaced per instance.
    #[serde(default)]
    pub generator: Option<GenConfig>,
}

impl DatasetConfig {
    /// The small single-size preset used by the bundled benchmark.
    pub fn desk_scale() -> Self {
        DatasetConfig {
            split: "test".into(),
            sizes: vec![SizeSpec {
                n: 10,
                budget_secs: 5.0,
                quotas: Quotas {
                    easy: 30,
                    medium: 20,
                    hard: 10,
                    expert: 10,
                },
            }],
            base_seed: 1_000,
            max_attempts: 20_000,
            thresholds: Thresholds::default(),
            metric: TimeMetric::Work {
                per_second: REFERENCE_WORK_RATE,
            },
            generator: None,
        }
    }

    /// Training split: easy instances only, seeded away from the test split.
    pub fn training(easy: usize) -> Self {
        let mut cfg = DatasetConfig::desk_scale();
        cfg.split = "train".into();
        cfg.base_seed = 500_000;
        cfg.sizes[0].quotas = Quotas {
            easy,
            ..Quotas::default()
        };
        cfg
    }
}

/// Work rate of the bundled presets' pseudo-clock, in units per second.
pub const REFERENCE_WORK_RATE: f64 = 1.0e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ManifestEntry {
    #[serde(flatten)]
    pub record: InstanceRecord,
    pub budget_secs: f64,
    /// Paths relative to the manifest directory.
    pub instance_file: String,
    pub problem_file: String,
}

impl ManifestEntry {
    pub fn level(&self) -> Option<Level> {
        self.record.level.as_deref().and_then(Level::parse)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Manifest {
    pub version: u32,
    pub split: String,
    pub config: DatasetConfig,
    pub instances: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Manifest, MazeError> {
        let text = fs::read_to_string(path).map_err(|e| MazeError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| MazeError::Format(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable") + "\n"
    }
}

/// Generates and classifies instances until every quota is met, then writes
/// instance files and `manifest.json` into `out_dir` (when given).
pub fn build_dataset(cfg: &DatasetConfig, out_dir: Option<&Path>) -> Result<Manifest, MazeError> {
    cfg.thresholds.validate()?;
    let mut entries = Vec::new();
    for size in &cfg.sizes {
        let mut found = [0usize; 4];
        let mut attempts = 0usize;
        let mut seed = cfg.base_seed;
        while Level::ALL.iter().any(|&l| found[l as usize] < size.quotas.get(l)) {
            if attempts == cfg.max_attempts {
                let level = Level::ALL
                    .into_iter()
                    .find(|&l| found[l as usize] < size.quotas.get(l))
                    .unwrap();
                return Err(MazeError::QuotaUnreachable {
                    n: size.n,
                    level: level.name().into(),
                    found: found[level as usize],
                    wanted: size.quotas.get(level),
                    attempts,
                });
            }
            attempts += 1;
            let mut gen = cfg.generator.clone().unwrap_or_else(|| GenConfig::new(size.n, seed));
            gen.n = size.n;
            gen.seed = seed;
            seed += 1;
            let grid = match generate(&gen) {
                Ok(g) => g,
                Err(MazeError::NoFreeCell { .. }) => continue,
                Err(e) => return Err(e),
            };
            let task = grid.to_task();
            // Stop the reference run at the upper cut of the hardest level
            // still wanted; anything slower could not be kept anyway.
            let hardest = Level::ALL
                .into_iter()
                .rev()
                .find(|&l| found[l as usize] < size.quotas.get(l))
                .expect("loop condition");
            let cap = size.budget_secs * upper_cut(hardest, &cfg.thresholds);
            let (outcome, time) = reference_run(&task, cfg.metric, cap)?;
            if outcome == RefOutcome::TimedOut && hardest != Level::Expert {
                continue;
            }
            let c = Classification {
                level: level_for(outcome, time, size.budget_secs, &cfg.thresholds),
                solve_time_sec: time,
            };
            let DifficultyLevel::Kept(level) = c.level else { continue };
            if found[level as usize] >= size.quotas.get(level) {
                continue;
            }
            found[level as usize] += 1;
            let mut record = grid.to_record();
            record.id = format!("{}-{}", cfg.split, record.id);
            record.level = Some(level.name().into());
            record.ref_solve_time_sec = Some(c.solve_time_sec);
            entries.push((level, record, task, size.budget_secs));
        }
    }
    entries.sort_by(|a, b| (a.1.n, a.0, a.1.seed).cmp(&(b.1.n, b.0, b.1.seed)));

    let mut instances = Vec::with_capacity(entries.len());
    for (_, record, mut task, budget_secs) in entries {
        let instance_file = format!("instances/{}.json", record.id);
        let problem_file = format!("instances/{}.pddl", record.id);
        if let Some(dir) = out_dir {
            let inst_dir = dir.join("instances");
            fs::create_dir_all(&inst_dir).map_err(|e| MazeError::Io(format!("{}: {e}", inst_dir.display())))?;
            task.name = record.id.clone();
            write(&dir.join(&instance_file), &(serde_json::to_string_pretty(&record).unwrap() + "\n"))?;
            write(&dir.join(&problem_file), &emit_task(&task))?;
        }
        instances.push(ManifestEntry {
            record,
            budget_secs,
            instance_file,
            problem_file,
        });
    }
    let manifest = Manifest {
        version: 1,
        split: cfg.split.clone(),
        config: cfg.clone(),
        instances,
    };
    if let Some(dir) = out_dir {
        write(&dir.join("manifest.json"), &manifest.to_json())?;
    }
    Ok(manifest)
}

/// Fraction of the budget below which a solve time belongs to `level` or an
/// easier one.
fn upper_cut(level: Level, t: &Thresholds) -> f64 {
    match level {
        Level::Easy => t.easy,
        Level::Medium => t.medium,
        Level::Hard => t.hard,
        Level::Expert => 1.0,
    }
}

fn write(path: &PathBuf, text: &str) -> Result<(), MazeError> {
    fs::write(path, text).map_err(|e| MazeError::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mazenamo::grid::MazeGrid;

    #[test]
    fn level_cutoffs_with_stubbed_times() {
        let t = Thresholds::default();
        let lvl = |time: f64| level_for(RefOutcome::Solved, time, 5.0, &t);
        assert_eq!(lvl(0.05), DifficultyLevel::Discarded(DiscardReason::Trivial));
        assert_eq!(lvl(0.2), DifficultyLevel::Kept(Level::Easy));
        assert_eq!(lvl(1.0), DifficultyLevel::Kept(Level::Medium));
        assert_eq!(lvl(0.6 * 5.0 - 0.01), DifficultyLevel::Kept(Level::Hard));
        assert_eq!(lvl(4.9), DifficultyLevel::Kept(Level::Expert));
        assert_eq!(
            level_for(RefOutcome::TimedOut, 5.0, 5.0, &t),
            DifficultyLevel::Discarded(DiscardReason::TooHard)
        );
        assert_eq!(
            level_for(RefOutcome::Unsolvable, 0.0, 5.0, &t),
            DifficultyLevel::Discarded(DiscardReason::Unsolvable)
        );
    }

    #[test]
    fn stubbed_planner_at_sixty_percent_is_hard() {
        let t = Thresholds::default();
        // 60% of the budget falls just under the hard cut-off when measured
        // as 0.599 of it; the boundary itself belongs to expert.
        assert_eq!(level_for(RefOutcome::Solved, 2.99, 5.0, &t), DifficultyLevel::Kept(Level::Hard));
        assert_eq!(level_for(RefOutcome::Solved, 3.0, 5.0, &t), DifficultyLevel::Kept(Level::Expert));
    }

    fn grid(rows: &[&str]) -> MazeGrid {
        MazeGrid::from_ascii(&rows.join("\n"), 0).unwrap()
    }

    #[test]
    fn trivial_and_unsolvable_instances_are_discarded() {
        let cfg = ClassifyConfig {
            budget_secs: 5.0,
            thresholds: Thresholds::default(),
            metric: TimeMetric::WallClock,
        };
        let near = grid(&["#####", "#>G.#", "#...#", "#...#", "#####"]);
        let c = classify_difficulty(&near.to_task(), &cfg).unwrap();
        assert_eq!(c.level, DifficultyLevel::Discarded(DiscardReason::Trivial));

        let walled = grid(&["#####", "#>#G#", "###.#", "#...#", "#####"]);
        let c = classify_difficulty(&walled.to_task(), &cfg).unwrap();
        assert_eq!(c.level, DifficultyLevel::Discarded(DiscardReason::Unsolvable));
    }

    #[test]
    fn zero_quotas_give_empty_manifest() {
        let mut cfg = DatasetConfig::desk_scale();
        cfg.sizes[0].quotas = Quotas::default();
        let m = build_dataset(&cfg, None).unwrap();
        assert!(m.instances.is_empty());
    }

    #[test]
    fn quota_unreachable_is_reported() {
        let mut cfg = DatasetConfig::desk_scale();
        cfg.sizes[0].n = 5;
        cfg.sizes[0].quotas = Quotas { expert: 1, ..Quotas::default() };
        cfg.max_attempts = 3;
        cfg.metric = TimeMetric::Work { per_second: 1e6 };
        assert!(matches!(build_dataset(&cfg, None), Err(MazeError::QuotaUnreachable { .. })));
    }

    #[test]
    fn small_quota_is_met_reproducibly_and_reclassifies() {
        let mut cfg = DatasetConfig::desk_scale();
        cfg.sizes[0].quotas = Quotas { easy: 2, medium: 1, ..Quotas::default() };
        let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
        let m = build_dataset(&cfg, Some(dirs[0].path())).unwrap();
        build_dataset(&cfg, Some(dirs[1].path())).unwrap();
        let bytes = |d: &tempfile::TempDir| fs::read(d.path().join("manifest.json")).unwrap();
        assert_eq!(bytes(&dirs[0]), bytes(&dirs[1]));
        assert_eq!(Manifest::load(&dirs[0].path().join("manifest.json")).unwrap(), m);

        let levels: Vec<_> = m.instances.iter().map(|e| e.level().unwrap()).collect();
        assert_eq!(levels, vec![Level::Easy, Level::Easy, Level::Medium]);
        let classify = ClassifyConfig {
            budget_secs: 5.0,
            thresholds: Thresholds::default(),
            metric: cfg.metric,
        };
        for e in &m.instances {
            let c = classify_difficulty(&e.record.to_grid().unwrap().to_task(), &classify).unwrap();
            assert_eq!(c.level, DifficultyLevel::Kept(e.level().unwrap()));
            assert_eq!(Some(c.solve_time_sec), e.record.ref_solve_time_sec);
        }
    }
}
