use std::error::Error;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;

use namoplan::bench::{emit_report, run_suite, ReportFormat, SuiteConfig};
use namoplan::gnn::{self, CurvePoint, TrainConfig};
use namoplan::mazenamo::{
    classify_difficulty, generate, mazenamo_domain, render_state, ClassifyConfig, DatasetConfig, GenConfig,
    InstanceRecord, Manifest, Thresholds, TimeMetric,
};
use namoplan::pddl::{emit_domain, emit_task, parse_plan, parse_task, validate_plan, Task};
use namoplan::pipeline::{run_method, FixedScores, GnnScorer, Method, PipelineConfig, Timing};
use namoplan::scenegraph::{examples_from_json, examples_to_json, optimal_example};

type Res<T> = Result<T, Box<dyn Error>>;

#[derive(Parser)]
#[command(name = "namoplan", version, about = "Budgeted planning with learned entity importance for MazeNamo")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate one random maze and print it.
    Gen {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for `<id>.json` and `<id>.pddl`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the domain file into the output directory.
        #[arg(long)]
        domain: bool,
    },
    /// Build a leveled dataset and its manifest.
    Dataset {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Training split with this many easy instances instead of the test preset.
        #[arg(long)]
        train: Option<usize>,
        #[arg(long)]
        base_seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Classify one instance by reference-planner solve time.
    Classify {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        budget: Option<f64>,
        /// Time classification on the wall clock instead of the work clock.
        #[arg(long)]
        wall: bool,
    },
    /// Draw an instance, optionally after executing a plan.
    Render {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        plan: Option<PathBuf>,
    },
    /// Label a training split with optimal plans and fit the importance model.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Training-split manifest; labelled examples are written next to it.
        #[arg(long, conflicts_with = "examples")]
        manifest: Option<PathBuf>,
        /// Previously labelled examples.
        #[arg(long)]
        examples: Option<PathBuf>,
        #[arg(long, default_value_t = 20_000)]
        max_expansions: u64,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        curve: Option<PathBuf>,
    },
    /// Run one method on one instance and print the result as JSON.
    Plan {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value = "flax")]
        method: String,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        budget: Option<f64>,
        /// Measure the budget on the wall clock instead of the work clock.
        #[arg(long)]
        wall: bool,
    },
    /// Run a suite over a manifest and write reports.
    Bench {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        model: Option<PathBuf>,
        /// Comma-separated method names.
        #[arg(long)]
        methods: Option<String>,
        #[arg(long)]
        parallelism: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a plan against an instance.
    Validate {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        plan: PathBuf,
    },
}

fn read(path: &Path) -> Res<String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn write(path: &Path, text: &str) -> Res<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn load_config<T: DeserializeOwned + Default>(path: &Option<PathBuf>) -> Res<T> {
    match path {
        Some(p) => Ok(serde_json::from_str(&read(p)?).map_err(|e| format!("{}: {e}", p.display()))?),
        None => Ok(T::default()),
    }
}

/// Reads an instance record (`.json`) or a problem file (anything else).
fn load_task(path: &Path) -> Res<Task> {
    let text = read(path)?;
    if path.extension().is_some_and(|e| e == "json") {
        let record: InstanceRecord = serde_json::from_str(&text)?;
        let mut task = record.to_grid()?.to_task();
        task.name = record.id;
        Ok(task)
    } else {
        Ok(parse_task(&text, &mazenamo_domain())?)
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Res<ExitCode> {
    match cli.command {
        Command::Gen {
            config,
            n,
            seed,
            out,
            domain,
        } => {
            let mut cfg: GenConfig = match &config {
                Some(p) => serde_json::from_str(&read(p)?)?,
                None => GenConfig::new(10, 0),
            };
            cfg.n = n.unwrap_or(cfg.n);
            cfg.seed = seed.unwrap_or(cfg.seed);
            let grid = generate(&cfg)?;
            print!("{}", grid.render());
            if let Some(dir) = out {
                let record = grid.to_record();
                write(&dir.join(format!("{}.json", record.id)), &(serde_json::to_string_pretty(&record)? + "\n"))?;
                write(&dir.join(format!("{}.pddl", record.id)), &emit_task(&grid.to_task()))?;
                if domain {
                    write(&dir.join("domain.pddl"), &emit_domain(&mazenamo_domain()))?;
                }
            }
        }
        Command::Dataset {
            config,
            train,
            base_seed,
            out,
        } => {
            let mut cfg = match (&config, train) {
                (Some(p), _) => serde_json::from_str(&read(p)?)?,
                (None, Some(k)) => DatasetConfig::training(k),
                (None, None) => DatasetConfig::desk_scale(),
            };
            cfg.base_seed = base_seed.unwrap_or(cfg.base_seed);
            let manifest = namoplan::mazenamo::build_dataset(&cfg, Some(&out))?;
            eprintln!("{} instances written to {}", manifest.instances.len(), out.display());
        }
        Command::Classify {
            config,
            instance,
            budget,
            wall,
        } => {
            let mut cfg = match &config {
                Some(p) => serde_json::from_str(&read(p)?)?,
                None => ClassifyConfig {
                    budget_secs: 5.0,
                    thresholds: Thresholds::default(),
                    metric: DatasetConfig::desk_scale().metric,
                },
            };
            cfg.budget_secs = budget.unwrap_or(cfg.budget_secs);
            if wall {
                cfg.metric = TimeMetric::WallClock;
            }
            let c = classify_difficulty(&load_task(&instance)?, &cfg)?;
            println!("{}", serde_json::to_string(&c)?);
        }
        Command::Render { instance, plan } => {
            let task = load_task(&instance)?;
            let mut state = task.init.clone();
            if let Some(p) = plan {
                let plan = parse_plan(&read(&p)?)?;
                let domain = mazenamo_domain();
                for step in &plan.steps {
                    let schema = domain.action(&step.action).ok_or_else(|| format!("unknown action {}", step.action))?;
                    for a in &schema.pre {
                        if !state.contains(&schema.instantiate(a, &step.args)) {
                            return Err(format!("step `{step}` is not applicable").into());
                        }
                    }
                    for a in &schema.del {
                        state.remove(&schema.instantiate(a, &step.args));
                    }
                    for a in &schema.add {
                        state.insert(schema.instantiate(a, &step.args));
                    }
                }
            }
            print!("{}", render_state(&task, &state));
        }
        Command::Train {
            config,
            manifest,
            examples,
            max_expansions,
            epochs,
            seed,
            out,
            curve,
        } => {
            let mut cfg: TrainConfig = load_config(&config)?;
            cfg.epochs = epochs.unwrap_or(cfg.epochs);
            cfg.seed = seed.unwrap_or(cfg.seed);
            let data = match (manifest, examples) {
                (Some(m), _) => {
                    let manifest = Manifest::load(&m)?;
                    let domain = mazenamo_domain();
                    let mut data = Vec::new();
                    for e in &manifest.instances {
                        let task = e.record.to_grid()?.to_task();
                        match optimal_example(&domain, &e.record.id, &task, max_expansions)? {
                            Some(x) => data.push(x),
                            None => eprintln!("skipped {}: no optimal plan within the expansion cap", e.record.id),
                        }
                    }
                    let path = m.with_file_name("examples.json");
                    write(&path, &examples_to_json(&data))?;
                    eprintln!("{} labelled examples written to {}", data.len(), path.display());
                    data
                }
                (None, Some(p)) => examples_from_json(&read(&p)?)?,
                (None, None) => return Err("pass --manifest or --examples".into()),
            };
            let (params, points) = gnn::train(&data, &cfg)?;
            gnn::save(&params, &out)?;
            if let Some(c) = curve {
                write(&c, &CurvePoint::csv(&points))?;
            }
            let last = points.last().expect("curve has epoch 0");
            eprintln!("trained {} epochs; final train loss {:.4}", last.epoch, last.train_loss);
        }
        Command::Plan {
            config,
            instance,
            method,
            model,
            budget,
            wall,
        } => {
            let mut cfg: PipelineConfig = load_config(&config)?;
            cfg.budget_secs = budget.unwrap_or(cfg.budget_secs);
            if wall {
                cfg.timing = Timing::Wall;
            }
            let method = Method::parse(&method).ok_or_else(|| format!("unknown method `{method}`"))?;
            let task = load_task(&instance)?;
            let domain = mazenamo_domain();
            let result = match (&model, method.needs_model()) {
                (Some(m), _) => run_method(method, &domain, &task, &GnnScorer(&gnn::load(m)?), &cfg)?,
                (None, false) => run_method(method, &domain, &task, &FixedScores::default(), &cfg)?,
                (None, true) => return Err(format!("method `{}` needs --model", method.name()).into()),
            };
            println!("{}", serde_json::to_string_pretty(&result)?);
        }
        Command::Bench {
            config,
            manifest,
            model,
            methods,
            parallelism,
            out,
        } => {
            let mut cfg: SuiteConfig = load_config(&config)?;
            if let Some(m) = manifest {
                cfg.manifest = m;
            }
            if model.is_some() {
                cfg.model = model;
            }
            if let Some(list) = methods {
                cfg.methods = list
                    .split(',')
                    .map(|s| Method::parse(s.trim()).ok_or_else(|| format!("unknown method `{s}`")))
                    .collect::<Result<_, _>>()?;
            }
            cfg.parallelism = parallelism.unwrap_or(cfg.parallelism);
            let report = run_suite(&cfg)?;
            write(&out.join("report.md"), &emit_report(&report, ReportFormat::Markdown))?;
            write(&out.join("report.csv"), &emit_report(&report, ReportFormat::Csv))?;
            write(&out.join("runs.jsonl"), &emit_report(&report, ReportFormat::Jsonl))?;
            write(&out.join("report.json"), &emit_report(&report, ReportFormat::Json))?;
            print!("{}", emit_report(&report, ReportFormat::Markdown));
            if !report.violations.is_empty() {
                for v in &report.violations {
                    eprintln!("violation: {v}");
                }
                return Ok(ExitCode::from(2));
            }
        }
        Command::Validate { instance, plan } => {
            let task = load_task(&instance)?;
            let plan = parse_plan(&read(&plan)?)?;
            let v = validate_plan(&mazenamo_domain(), &task, &plan)?;
            println!("{}", serde_json::to_string(&v)?);
            if !v.is_valid() {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
