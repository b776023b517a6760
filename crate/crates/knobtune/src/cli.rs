//! The `knobtune` command line. Each subcommand reads files, calls one
//! library operation and writes its artifacts under `--out`.

use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use knobtune_core::bench::{
    build_benchmark, model_select, synthetic, ModelKind, Provenance, SelectOptions, TuningBenchmark,
};
use knobtune_core::importance::{measure, topk, Method};
use knobtune_core::optimize::{SessionOptions, Transfer};
use knobtune_core::transfer::BaseTask;
use knobtune_core::{ConfigSpace, Configuration, KnobKind, OptimizerKind, Sense, Status, TuningSession};

use crate::archive::load_archive;
use crate::benchfile::{read_benchmark, write_benchmark};
use crate::dataset::{assemble_dataset, training_set};
use crate::experiment::{report, run_experiment, ExperimentPlan};
use crate::objective::ExternalObjective;
use crate::spacefile::{read_config, read_space, write_config, write_json, write_space};
use crate::table::{trajectory_rows, write_training, write_trajectory};

#[derive(Debug, Parser)]
#[command(name = "knobtune", version, about = "Knob selection, configuration tuning and surrogate benchmarks")]
pub struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a space document and print a one-line summary.
    SpaceValidate(SpaceValidateArgs),
    /// Draw configurations, optionally evaluating them.
    Sample(SampleArgs),
    /// Measure knob importance on a data set and keep the top k knobs.
    SelectKnobs(SelectArgs),
    /// Run one tuning session against a command or a benchmark.
    Tune(TuneArgs),
    /// Select a surrogate by cross-validation and package a benchmark.
    BenchBuild(BenchBuildArgs),
    /// Run an optimizer tournament from a plan file and summarize it.
    BenchRun(BenchRunArgs),
    /// Summarize a finished tournament directory.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct SpaceValidateArgs {
    #[arg(long)]
    pub space: PathBuf,
    /// Write the normalized document to `<out>/space.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Design {
    Lhs,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Synthetic {
    /// 15 integer and 5 categorical knobs, minimized.
    Heterogeneous,
    /// 20 integer knobs, minimized.
    Integer,
    /// Additive family with one dominant knob, maximized (uses --knobs-num).
    Additive,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long, required_unless_present = "synthetic", conflicts_with = "synthetic")]
    pub space: Option<PathBuf>,
    /// Use a shipped synthetic function as space and objective.
    #[arg(long, value_enum)]
    pub synthetic: Option<Synthetic>,
    /// Knob count of the additive family.
    #[arg(long, default_value_t = 6)]
    pub knobs_num: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Design::Lhs)]
    pub design: Design,
    /// Evaluate each sample with this command (`{config_path}` is substituted).
    #[arg(long, conflicts_with = "synthetic")]
    pub objective_cmd: Option<String>,
    #[arg(long, default_value_t = 600.0)]
    pub timeout_secs: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[arg(long)]
    pub space: PathBuf,
    /// Training CSVs or trajectories; concatenated in order.
    #[arg(long, required = true, num_args = 1..)]
    pub data: Vec<PathBuf>,
    #[arg(long)]
    pub method: String,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub sense: String,
    #[arg(long)]
    pub seed: u64,
    /// Configuration JSON to use instead of the space defaults.
    #[arg(long)]
    pub default_config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TransferMode {
    None,
    Rgpe,
    Mapping,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    /// Space of the objective command (taken from the benchmark otherwise).
    #[arg(long, required_unless_present = "benchmark")]
    pub space: Option<PathBuf>,
    #[arg(long)]
    pub optimizer: String,
    #[arg(long)]
    pub budget: usize,
    #[arg(long)]
    pub seed: u64,
    /// Required with --objective-cmd; benchmarks carry their own.
    #[arg(long)]
    pub sense: Option<String>,
    #[arg(long, required_unless_present = "benchmark", conflicts_with = "benchmark")]
    pub objective_cmd: Option<String>,
    #[arg(long)]
    pub benchmark: Option<PathBuf>,
    #[arg(long, default_value_t = 600.0)]
    pub timeout_secs: f64,
    /// Tune only the knobs listed in this file (one name per line); the
    /// others stay at their defaults.
    #[arg(long)]
    pub knobs: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = TransferMode::None)]
    pub transfer: TransferMode,
    /// Source-task archive directory for --transfer.
    #[arg(long, required_if_eq_any = [("transfer", "rgpe"), ("transfer", "mapping")])]
    pub archive: Option<PathBuf>,
    /// Posterior samples per RGPE weight estimate.
    #[arg(long, default_value_t = 100)]
    pub rgpe_samples: usize,
    /// Size of the initial Latin hypercube design.
    #[arg(long)]
    pub n_init: Option<usize>,
    /// Quantile splitting good from bad observations in TPE.
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchBuildArgs {
    #[arg(long)]
    pub space: PathBuf,
    #[arg(long, required = true, num_args = 1..)]
    pub data: Vec<PathBuf>,
    #[arg(long)]
    pub sense: String,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub default_config: Option<PathBuf>,
    /// Candidate surrogate models.
    #[arg(long, value_delimiter = ',', default_value = "rf,knn,ridge")]
    pub candidates: Vec<String>,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    /// Random hyperparameter draws per candidate.
    #[arg(long, default_value_t = 20)]
    pub draws: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchRunArgs {
    #[arg(long)]
    pub plan: PathBuf,
    /// Sessions run in parallel.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Overrides the plan's `out_dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Tournament directory holding `manifest.json`.
    #[arg(long)]
    pub dir: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::SpaceValidate(a) => space_validate(a),
        Command::Sample(a) => sample(a),
        Command::SelectKnobs(a) => select_knobs(a),
        Command::Tune(a) => tune(a),
        Command::BenchBuild(a) => bench_build(a),
        Command::BenchRun(a) => bench_run(a),
        Command::Report(a) => {
            let s = report(&a.dir, &a.out)?;
            println!("report: {} optimizers -> {}", s.optimizers.len(), a.out.display());
            Ok(())
        }
    }
}

fn space_validate(a: SpaceValidateArgs) -> Result<()> {
    let space = read_space(&a.space)?;
    let count = |f: fn(&KnobKind) -> bool| space.knobs().iter().filter(|k| f(k.kind())).count();
    println!(
        "ok: `{}` has {} knobs ({} continuous, {} integer, {} categorical)",
        space.name(),
        space.len(),
        count(|k| matches!(k, KnobKind::Continuous { .. })),
        count(|k| matches!(k, KnobKind::Integer { .. })),
        count(|k| matches!(k, KnobKind::Categorical { .. })),
    );
    if let Some(out) = a.out {
        write_space(&out.join("space.json"), &space)?;
    }
    Ok(())
}

fn sample(a: SampleArgs) -> Result<()> {
    let function = match a.synthetic {
        Some(Synthetic::Heterogeneous) => Some(synthetic::heterogeneous()),
        Some(Synthetic::Integer) => Some(synthetic::integer_control()),
        Some(Synthetic::Additive) => Some(synthetic::additive(a.knobs_num, a.seed)?.0),
        None => None,
    };
    let space = match (&function, &a.space) {
        (Some(f), _) => f.space.clone(),
        (None, Some(p)) => read_space(p)?,
        (None, None) => bail!("--space or --synthetic is required"),
    };
    let configs = match a.design {
        Design::Lhs => space.lhs_sample(a.n, a.seed),
        Design::Random => space.random_sample(a.n, a.seed),
    };
    let path = a.out.join("samples.csv");
    if let Some(f) = &function {
        write_space(&a.out.join("space.json"), &space)?;
        write_json(&a.out.join("sense.json"), &f.sense.as_str())?;
        let rows: Vec<(Configuration, f64, Status)> =
            configs.into_iter().map(|c| Ok((c.clone(), f.evaluate(&c)?, Status::Ok))).collect::<Result<_>>()?;
        write_training(&path, &space, &rows)?;
    } else if let Some(cmd) = &a.objective_cmd {
        let mut objective = ExternalObjective::new(cmd.clone(), timeout(a.timeout_secs)?)?;
        let mut rows = Vec::with_capacity(configs.len());
        for c in configs {
            let e = objective.evaluate(&space, &c)?;
            if let Some(d) = &e.diagnostic {
                log::warn!("sample {}: {d}", rows.len() + 1);
            }
            rows.push((c, e.value, e.status));
        }
        write_training(&path, &space, &rows)?;
    } else {
        write_configs_only(&path, &space, &configs)?;
    }
    println!("sample: {} configurations -> {}", a.n, path.display());
    Ok(())
}

fn write_configs_only(path: &Path, space: &ConfigSpace, configs: &[Configuration]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(space.knob_names())?;
    for c in configs {
        w.write_record(
            space.knobs().iter().zip(c.values()).map(|(k, v)| crate::table::format_value(k, v)),
        )?;
    }
    crate::error::write_file(path, &w.into_inner()?)?;
    Ok(())
}

fn timeout(secs: f64) -> Result<Duration> {
    Duration::try_from_secs_f64(secs).context("invalid --timeout-secs")
}

fn default_config(space: &ConfigSpace, path: &Option<PathBuf>) -> Result<Configuration> {
    Ok(match path {
        Some(p) => read_config(p, space)?,
        None => space.default_config(),
    })
}

fn select_knobs(a: SelectArgs) -> Result<()> {
    let space = read_space(&a.space)?;
    let method: Method = a.method.parse()?;
    let sense: Sense = a.sense.parse()?;
    if a.k == 0 || a.k > space.len() {
        bail!("--k must be in 1..={}", space.len());
    }
    let data = assemble_dataset(&space, &a.data)?;
    let set = training_set(&space, &data, sense, default_config(&space, &a.default_config)?, a.seed)?;
    let report = measure(method, &set, a.seed)?;
    let top = topk(&report, a.k)?;
    write_json(&a.out.join("importance.json"), &report)?;
    crate::error::write_file(&a.out.join("top_knobs.txt"), (top.join("\n") + "\n").as_bytes())?;
    println!("select-knobs: {} over {} rows; top {}: {}", method.as_str(), data.len(), a.k, top.join(","));
    Ok(())
}

fn read_knob_list(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("{}", path.display()))?;
    Ok(text.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect())
}

enum Objective {
    Command(ExternalObjective),
    Bench(Box<TuningBenchmark>),
}

fn tune(a: TuneArgs) -> Result<()> {
    let kind: OptimizerKind = a.optimizer.parse()?;
    let (full_space, sense, mut objective) = match (&a.benchmark, &a.objective_cmd) {
        (Some(b), _) => {
            let bench = read_benchmark(b)?;
            if a.space.is_some() || a.sense.is_some() {
                bail!("--space and --sense come from the benchmark");
            }
            (bench.space.clone(), bench.sense, Objective::Bench(Box::new(bench)))
        }
        (None, Some(cmd)) => {
            let space = read_space(a.space.as_deref().context("--space is required")?)?;
            let sense: Sense = a.sense.as_deref().context("--sense is required with --objective-cmd")?.parse()?;
            (space, sense, Objective::Command(ExternalObjective::new(cmd.clone(), timeout(a.timeout_secs)?)?))
        }
        (None, None) => bail!("--objective-cmd or --benchmark is required"),
    };
    let names = match &a.knobs {
        Some(p) => read_knob_list(p)?,
        None => full_space.knob_names().iter().map(|s| s.to_string()).collect(),
    };
    let (space, completion) = full_space.subspace(&names.iter().map(String::as_str).collect::<Vec<_>>())?;
    let mut options = SessionOptions::default();
    if let Some(n) = a.n_init {
        options.n_init = n;
    }
    if let Some(g) = a.gamma {
        if !(g > 0.0 && g < 1.0) {
            bail!("--gamma must lie in (0, 1)");
        }
        options.gamma = g;
    }
    options.transfer = match a.transfer {
        TransferMode::None => Transfer::None,
        mode => {
            let dir = a.archive.as_deref().context("--archive is required with --transfer")?;
            let bases: Vec<BaseTask> = load_archive(dir, &full_space)?
                .into_iter()
                .map(|t| BaseTask {
                    configs: t.configs.iter().map(|c| completion.restrict(c)).collect(),
                    ..t
                })
                .collect();
            if mode == TransferMode::Rgpe {
                Transfer::Rgpe {
                    bases,
                    samples: a.rgpe_samples,
                }
            } else {
                Transfer::Mapping { sources: bases }
            }
        }
    };
    let mut session = TuningSession::with_options(space, kind, sense, a.budget, a.seed, options)?;
    while session.history().len() < session.budget() {
        let c = session.suggest()?;
        let full = completion.complete(&c);
        let (value, status, metrics) = match &mut objective {
            Objective::Command(o) => {
                let e = o.evaluate(&full_space, &full)?;
                if let Some(d) = &e.diagnostic {
                    log::warn!("iteration {}: {d}", session.history().len() + 1);
                }
                (e.value, e.status, e.metrics)
            }
            Objective::Bench(b) => (knobtune_core::bench::bench_evaluate(b, &full)?, Status::Ok, None),
        };
        session.observe_with_metrics(c, value, status, metrics)?;
        log::info!("iteration {}: {value}", session.history().len());
    }
    let rows = trajectory_rows(session.history(), |c| completion.complete(c));
    write_trajectory(&a.out.join("trajectory.csv"), &full_space, &rows)?;
    if let Some(profile) = session.history().metrics_profile() {
        write_json(&a.out.join("trajectory.metrics.json"), &profile)?;
    }
    let (best, value) = knobtune_core::optimize::best_so_far(session.history())?;
    write_config(&a.out.join("best.json"), &full_space, &completion.complete(best))?;
    println!("tune: {kind} best {value} after {} evaluations", session.history().len());
    Ok(())
}

fn bench_build(a: BenchBuildArgs) -> Result<()> {
    let space = read_space(&a.space)?;
    let sense: Sense = a.sense.parse()?;
    let candidates = a.candidates.iter().map(|c| c.parse::<ModelKind>()).collect::<Result<Vec<_>, _>>()?;
    let data = assemble_dataset(&space, &a.data)?;
    let options = SelectOptions {
        folds: a.folds,
        draws: a.draws,
    };
    let selection = model_select(&space, &data.configs, &data.values, &candidates, &options, a.seed)?;
    let params = *selection.winning_params();
    let provenance = Provenance {
        dataset: data.sources.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(","),
        n_samples: data.len(),
        selection: Some(selection.clone()),
    };
    let default_config = default_config(&space, &a.default_config)?;
    let bench = build_benchmark(space, &data.configs, &data.values, sense, default_config, &params, provenance, a.seed)?;
    write_benchmark(&a.out.join("benchmark.json"), &bench)?;
    write_json(&a.out.join("selection.json"), &selection)?;
    println!(
        "bench-build: {} rows, winner {} -> {}",
        data.len(),
        selection.winner.as_str(),
        a.out.join("benchmark.json").display()
    );
    Ok(())
}

fn bench_run(a: BenchRunArgs) -> Result<()> {
    let mut plan = ExperimentPlan::read(&a.plan)?;
    if let Some(out) = a.out {
        plan.out_dir = out;
    }
    let manifest = run_experiment(&plan, a.jobs)?;
    let summary = report(&plan.out_dir, &plan.out_dir)?;
    let ranks: Vec<String> = summary.ranking.mean_rank.iter().map(|(k, r)| format!("{k}={r}")).collect();
    println!("bench-run: {} sessions; mean ranks {}", manifest.entries.len(), ranks.join(" "));
    Ok(())
}
