//! Optimizer tournaments against a benchmark, and their summaries.
//!
//! `run_experiment` writes `trajectories/<optimizer>_seed<seed>.csv` and a
//! `manifest.json` under the plan's output directory. Each session owns its
//! seed, so the files do not depend on how many sessions run in parallel.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use knobtune_core::bench::{
    average_ranking, improvement_over_default, quartiles, run_benchmark_session, Provenance, RankingTable,
};
use knobtune_core::optimize::SessionOptions;
use knobtune_core::{OptimizerKind, Sense};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::benchfile::read_benchmark;
use crate::error::{write_file, Error, Result};
use crate::spacefile::{read_json, write_json};
use crate::table::{format_real, read_rows, trajectory_rows, write_trajectory};

/// Either a repetition count (seeds `0..n`) or explicit seeds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Seeds {
    Count(u64),
    List(Vec<u64>),
}

impl Seeds {
    pub fn to_vec(&self) -> Vec<u64> {
        match self {
            Seeds::Count(n) => (0..*n).collect(),
            Seeds::List(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    pub benchmark_path: PathBuf,
    pub optimizers: Vec<String>,
    pub budget: usize,
    pub seeds: Seeds,
    pub out_dir: PathBuf,
}

impl ExperimentPlan {
    /// Reads a plan; relative paths are taken relative to the plan file.
    pub fn read(path: &Path) -> Result<Self> {
        let mut plan: ExperimentPlan = read_json(path)?;
        let base = path.parent().unwrap_or(Path::new(""));
        plan.benchmark_path = base.join(&plan.benchmark_path);
        plan.out_dir = base.join(&plan.out_dir);
        Ok(plan)
    }

    /// Parsed optimizer kinds; rejects empty, duplicate or unknown entries,
    /// no seeds, duplicate seeds and budgets below the initial design.
    pub fn kinds(&self) -> Result<Vec<OptimizerKind>> {
        if self.optimizers.is_empty() {
            return Err(Error::Schema("plan lists no optimizers".into()));
        }
        let mut kinds = Vec::new();
        for name in &self.optimizers {
            let k: OptimizerKind = name.parse()?;
            if kinds.contains(&k) {
                return Err(Error::Schema(format!("optimizer `{k}` listed twice")));
            }
            kinds.push(k);
        }
        let seeds = self.seeds.to_vec();
        if seeds.is_empty() {
            return Err(Error::Schema("plan needs at least one seed".into()));
        }
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != seeds.len() {
            return Err(Error::Schema("duplicate seeds".into()));
        }
        let n_init = SessionOptions::default().n_init;
        if self.budget < n_init {
            return Err(Error::Schema(format!("budget {} is below the initial design of {n_init}", self.budget)));
        }
        Ok(kinds)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub optimizer: String,
    pub seed: u64,
    /// Relative to the manifest's directory.
    pub file: PathBuf,
    pub best: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub benchmark_path: PathBuf,
    pub budget: usize,
    pub entries: Vec<ManifestEntry>,
}

pub const MANIFEST: &str = "manifest.json";

/// Runs every (optimizer, seed) session on `jobs` worker threads.
pub fn run_experiment(plan: &ExperimentPlan, jobs: usize) -> Result<Manifest> {
    let kinds = plan.kinds()?;
    let bench = read_benchmark(&plan.benchmark_path)?;
    let tasks: Vec<(OptimizerKind, u64)> =
        kinds.iter().flat_map(|&k| plan.seeds.to_vec().into_iter().map(move |s| (k, s))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Schema(format!("thread pool: {e}")))?;
    let entries = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(kind, seed)| -> Result<ManifestEntry> {
                let session = run_benchmark_session(&bench, kind, plan.budget, seed, SessionOptions::default())?;
                let file = PathBuf::from("trajectories").join(format!("{}_seed{seed}.csv", kind.name()));
                let rows = trajectory_rows(session.history(), Clone::clone);
                write_trajectory(&plan.out_dir.join(&file), &bench.space, &rows)?;
                let best = rows.last().and_then(|r| r.best_so_far).unwrap_or(f64::NAN);
                log::info!("{kind} seed {seed}: best {best}");
                Ok(ManifestEntry {
                    optimizer: kind.name().into(),
                    seed,
                    file,
                    best,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let manifest = Manifest {
        benchmark_path: plan.benchmark_path.clone(),
        budget: plan.budget,
        entries,
    };
    write_json(&plan.out_dir.join(MANIFEST), &manifest)?;
    Ok(manifest)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSummary {
    pub seeds: Vec<u64>,
    pub best: Vec<f64>,
    /// Percent improvement over the benchmark default; absent when the
    /// default value is zero.
    pub improvement_pct: Option<Vec<f64>>,
    pub mean_rank: f64,
    /// First quartile, median and third quartile of `best`.
    pub best_quartiles: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub benchmark_path: PathBuf,
    pub sense: String,
    pub default_value: f64,
    pub provenance: Provenance,
    pub budget: usize,
    pub optimizers: BTreeMap<String, OptimizerSummary>,
    pub ranking: RankingTable,
}

/// Reads the tournament in `dir` and writes `summary.json` and
/// `best_so_far.csv` (quartiles over seeds per iteration) under `out`.
pub fn report(dir: &Path, out: &Path) -> Result<Summary> {
    let manifest: Manifest = read_json(&dir.join(MANIFEST))?;
    if manifest.entries.is_empty() {
        return Err(Error::Schema("empty trajectory set".into()));
    }
    let bench = read_benchmark(&manifest.benchmark_path)?;
    let sense = bench.sense;
    // per optimizer: seeds, session bests, best-so-far curves
    let mut runs: Runs = BTreeMap::new();
    for e in &manifest.entries {
        let rows = read_rows(&dir.join(&e.file), &bench.space)?;
        if rows.is_empty() {
            return Err(Error::format(dir.join(&e.file), "empty trajectory"));
        }
        let curve = best_curve(&rows, sense);
        let best = curve.iter().rev().flatten().next().copied().unwrap_or(f64::NAN);
        let slot = runs.entry(e.optimizer.clone()).or_default();
        slot.0.push(e.seed);
        slot.1.push(best);
        slot.2.push(curve);
    }
    let bests: BTreeMap<String, Vec<f64>> = runs.iter().map(|(k, v)| (k.clone(), v.1.clone())).collect();
    let ranking = average_ranking(&bests, sense)?;
    let mut optimizers = BTreeMap::new();
    for (name, (seeds, best, _)) in &runs {
        let improvement_pct = best
            .iter()
            .map(|b| improvement_over_default(*b, bench.default_value, sense))
            .collect::<std::result::Result<Vec<_>, _>>()
            .ok();
        optimizers.insert(
            name.clone(),
            OptimizerSummary {
                seeds: seeds.clone(),
                best: best.clone(),
                improvement_pct,
                mean_rank: ranking.mean_rank[name],
                best_quartiles: quartiles(best)?,
            },
        );
    }
    let summary = Summary {
        benchmark_path: manifest.benchmark_path.clone(),
        sense: sense.as_str().into(),
        default_value: bench.default_value,
        provenance: bench.provenance.clone(),
        budget: manifest.budget,
        optimizers,
        ranking,
    };
    write_json(&out.join("summary.json"), &summary)?;
    write_file(&out.join("best_so_far.csv"), curve_csv(&runs)?.as_bytes())?;
    Ok(summary)
}

/// Best-so-far per row, recomputed from the values so files without the
/// column still work.
fn best_curve(rows: &[crate::table::DataRow], sense: Sense) -> Vec<Option<f64>> {
    let mut best: Option<f64> = None;
    rows.iter()
        .map(|r| {
            if r.status == knobtune_core::Status::Ok {
                if let Some(v) = r.value {
                    if best.is_none_or(|b| sense.is_better(v, b)) {
                        best = Some(v);
                    }
                }
            }
            best
        })
        .collect()
}

type Runs = BTreeMap<String, (Vec<u64>, Vec<f64>, Vec<Vec<Option<f64>>>)>;

fn curve_csv(runs: &Runs) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Schema(e.to_string());
    w.write_record(["iteration", "optimizer", "q1", "median", "q3"]).map_err(io)?;
    for (name, (_, _, curves)) in runs {
        let len = curves.iter().map(Vec::len).max().unwrap_or(0);
        for i in 0..len {
            let at: Vec<f64> = curves.iter().filter_map(|c| c.get(i).copied().flatten()).collect();
            let cells = match quartiles(&at) {
                Ok(q) => q.map(format_real),
                Err(_) => [String::new(), String::new(), String::new()],
            };
            let mut rec = vec![(i + 1).to_string(), name.clone()];
            rec.extend(cells);
            w.write_record(&rec).map_err(io)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Schema(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
