//! Surrogate tuning benchmarks.
//!
//! A [`TuningBenchmark`] replaces an expensive system evaluation by the
//! prediction of a regression model fitted on collected observations. The
//! model family is chosen by cross-validation ([`model_select`]); random
//! forests win ties.

mod models;
pub mod synthetic;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use models::{ModelKind, ModelParams, RegressionModel};

use crate::math::{exp, ln, sqrt};
use crate::optimize::{run_session, OptimizerKind, Sense, SessionOptions, Status, TuningSession};
use crate::space::{ConfigSpace, Configuration};
use crate::surrogate::ForestParams;
use crate::{Error, Result};

/// Cross-validation score of one candidate family at its best draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvScore {
    pub model: ModelKind,
    pub params: ModelParams,
    pub rmse: f64,
    pub r2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSelection {
    pub scores: Vec<CvScore>,
    pub winner: ModelKind,
}

impl ModelSelection {
    pub fn winning_params(&self) -> &ModelParams {
        &self
            .scores
            .iter()
            .find(|s| s.model == self.winner)
            .expect("winner is scored")
            .params
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectOptions {
    pub folds: usize,
    /// Random hyperparameter draws per candidate; the first draw is the
    /// family's default.
    pub draws: usize,
}

impl Default for SelectOptions {
    fn default() -> Self {
        SelectOptions { folds: 10, draws: 20 }
    }
}

fn default_params(kind: ModelKind) -> ModelParams {
    match kind {
        ModelKind::Rf => ModelParams::Rf(ForestParams::default()),
        ModelKind::Knn => ModelParams::Knn {
            k: 5,
            distance_weighted: true,
        },
        ModelKind::Ridge => ModelParams::Ridge { alpha: 1e-3 },
    }
}

fn log_uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    exp(ln(lo) + rng.gen::<f64>() * (ln(hi) - ln(lo)))
}

fn draw_params<R: Rng + ?Sized>(kind: ModelKind, rng: &mut R) -> ModelParams {
    match kind {
        ModelKind::Rf => ModelParams::Rf(ForestParams {
            n_trees: rng.gen_range(20..=100),
            max_depth: if rng.gen::<bool>() { None } else { Some(rng.gen_range(4..=30)) },
            min_samples_leaf: rng.gen_range(1..=5),
            bootstrap: true,
            feature_fraction: rng.gen_range(0.3..=1.0),
        }),
        ModelKind::Knn => ModelParams::Knn {
            k: rng.gen_range(1..=20),
            distance_weighted: rng.gen(),
        },
        ModelKind::Ridge => ModelParams::Ridge {
            alpha: log_uniform(rng, 1e-6, 10.0),
        },
    }
}

/// Mean RMSE and mean R² of `params` over the folds.
///
/// R² is `1 - SS_res / SS_tot` per fold about the fold's own mean; a fold
/// with constant targets scores 1 when predicted exactly and 0 otherwise.
fn cross_validate(
    space: &ConfigSpace,
    x: &[Vec<f64>],
    y: &[f64],
    folds: &[Vec<usize>],
    params: &ModelParams,
    seed: u64,
) -> Result<(f64, f64)> {
    let (mut rmse, mut r2) = (0.0, 0.0);
    for (f, test) in folds.iter().enumerate() {
        let held: BTreeSet<usize> = test.iter().copied().collect();
        let (train_x, train_y): (Vec<Vec<f64>>, Vec<f64>) = (0..y.len())
            .filter(|i| !held.contains(i))
            .map(|i| (x[i].clone(), y[i]))
            .unzip();
        let model = RegressionModel::fit_encoded(space, train_x, &train_y, params, seed.wrapping_add(f as u64))?;
        let mean = test.iter().map(|&i| y[i]).sum::<f64>() / test.len() as f64;
        let (mut ss_res, mut ss_tot) = (0.0, 0.0);
        for &i in test {
            let e = model.predict_encoded(&x[i]) - y[i];
            ss_res += e * e;
            ss_tot += (y[i] - mean) * (y[i] - mean);
        }
        rmse += sqrt(ss_res / test.len() as f64);
        r2 += if ss_tot > 0.0 {
            1.0 - ss_res / ss_tot
        } else if ss_res == 0.0 {
            1.0
        } else {
            0.0
        };
    }
    let k = folds.len() as f64;
    Ok((rmse / k, r2 / k))
}

/// Random-search model selection by k-fold cross-validation.
///
/// Each candidate family is scored at its best of `options.draws`
/// hyperparameter draws (lowest mean RMSE). The winner has the lowest RMSE;
/// exact ties go to `rf`, then to the earlier candidate.
pub fn model_select(
    space: &ConfigSpace,
    configs: &[Configuration],
    y: &[f64],
    candidates: &[ModelKind],
    options: &SelectOptions,
    seed: u64,
) -> Result<ModelSelection> {
    if configs.len() != y.len() {
        return Err(Error::InvalidArgument("configs and y lengths differ".into()));
    }
    if options.folds < 2 || configs.len() < options.folds {
        return Err(Error::InsufficientData(alloc::format!(
            "{} observations cannot fill {} folds",
            configs.len(),
            options.folds
        )));
    }
    if candidates.is_empty() || options.draws == 0 {
        return Err(Error::InvalidArgument("no candidate models".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.shuffle(&mut rng);
    let mut folds = alloc::vec![Vec::new(); options.folds];
    for (pos, i) in order.into_iter().enumerate() {
        folds[pos % options.folds].push(i);
    }
    let mut scores = Vec::new();
    for &kind in candidates {
        let x = space.encode_all(configs, kind.scheme());
        let mut best: Option<CvScore> = None;
        for draw in 0..options.draws {
            let params = if draw == 0 { default_params(kind) } else { draw_params(kind, &mut rng) };
            let (rmse, r2) = cross_validate(space, &x, y, &folds, &params, seed)?;
            if best.as_ref().is_none_or(|b| rmse < b.rmse) {
                best = Some(CvScore { model: kind, params, rmse, r2 });
            }
        }
        scores.push(best.expect("at least one draw"));
    }
    let winner = scores
        .iter()
        .min_by(|a, b| {
            a.rmse
                .total_cmp(&b.rmse)
                .then_with(|| (b.model == ModelKind::Rf).cmp(&(a.model == ModelKind::Rf)))
        })
        .expect("non-empty")
        .model;
    Ok(ModelSelection { scores, winner })
}

/// Where a benchmark's data came from and how its model was chosen.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub dataset: String,
    pub n_samples: usize,
    pub selection: Option<ModelSelection>,
}

/// A packaged surrogate benchmark.
#[derive(Debug, Clone, PartialEq)]
pub struct TuningBenchmark {
    pub space: ConfigSpace,
    pub surrogate: RegressionModel,
    pub sense: Sense,
    pub default_config: Configuration,
    /// Surrogate prediction at `default_config`, recorded at build time.
    pub default_value: f64,
    pub provenance: Provenance,
}

impl TuningBenchmark {
    /// Checks that the model's input width matches the space encoding.
    pub fn validate(&self) -> Result<()> {
        self.space.validate(&self.default_config)?;
        let width = self.space.layout(self.surrogate.kind().scheme()).width();
        match self.surrogate.input_width() {
            Some(w) if w != width => Err(Error::LayoutMismatch(alloc::format!(
                "surrogate expects {w} columns, space encodes {width}"
            ))),
            _ => Ok(()),
        }
    }
}

/// Fits `params` on all data and packages the benchmark.
#[allow(clippy::too_many_arguments)]
pub fn build_benchmark(
    space: ConfigSpace,
    configs: &[Configuration],
    y: &[f64],
    sense: Sense,
    default_config: Configuration,
    params: &ModelParams,
    provenance: Provenance,
    seed: u64,
) -> Result<TuningBenchmark> {
    if configs.is_empty() {
        return Err(Error::InsufficientData("empty dataset".into()));
    }
    for c in configs {
        space.validate(c)?;
    }
    space.validate(&default_config)?;
    let surrogate = RegressionModel::fit(&space, configs, y, params, seed)?;
    let default_value = surrogate.predict(&space, &default_config);
    Ok(TuningBenchmark {
        space,
        surrogate,
        sense,
        default_config,
        default_value,
        provenance,
    })
}

/// Surrogate prediction for a valid configuration.
pub fn bench_evaluate(bench: &TuningBenchmark, config: &Configuration) -> Result<f64> {
    bench.space.validate(config)?;
    Ok(bench.surrogate.predict(&bench.space, config))
}

/// Runs one full session of `kind` against the benchmark.
pub fn run_benchmark_session(
    bench: &TuningBenchmark,
    kind: OptimizerKind,
    budget: usize,
    seed: u64,
    options: SessionOptions,
) -> Result<TuningSession> {
    let mut session = TuningSession::with_options(bench.space.clone(), kind, bench.sense, budget, seed, options)?;
    run_session(&mut session, |c| match bench_evaluate(bench, c) {
        Ok(v) => (v, Status::Ok),
        Err(_) => (f64::NAN, Status::Failed),
    })?;
    Ok(session)
}

/// Improvement of `best` over `default_value` in percent, positive when better.
pub fn improvement_over_default(best: f64, default_value: f64, sense: Sense) -> Result<f64> {
    if default_value == 0.0 {
        return Err(Error::InvalidArgument("default value is zero".into()));
    }
    Ok(match sense {
        Sense::Maximize => (best - default_value) / default_value * 100.0,
        Sense::Minimize => (default_value - best) / default_value * 100.0,
    })
}

/// First quartile, median and third quartile with linear interpolation
/// between order statistics.
pub fn quartiles(values: &[f64]) -> Result<[f64; 3]> {
    if values.is_empty() {
        return Err(Error::InsufficientData("no values".into()));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let at = |q: f64| {
        let pos = q * (v.len() - 1) as f64;
        let lo = crate::math::floor(pos) as usize;
        let hi = (lo + 1).min(v.len() - 1);
        v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
    };
    Ok([at(0.25), at(0.5), at(0.75)])
}

/// Rank table of optimizers over repeated sessions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingTable {
    /// Rank of each optimizer per round: round 0 compares every optimizer's
    /// best session, round 1 the second best, and so on.
    pub round_ranks: BTreeMap<String, Vec<f64>>,
    pub mean_rank: BTreeMap<String, f64>,
    /// Quartiles of the session best values.
    pub quartiles: BTreeMap<String, [f64; 3]>,
}

/// Ranks of `values` (1 = best); ties share the mean of their positions.
pub fn tied_ranks(values: &[f64], sense: Sense) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| sense.loss(values[a]).total_cmp(&sense.loss(values[b])));
    let mut ranks = alloc::vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let shared = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = shared;
        }
        i = j + 1;
    }
    ranks
}

/// Sorts each optimizer's session bests from best to worst, ranks the
/// optimizers within each position, and averages the ranks.
pub fn average_ranking(results: &BTreeMap<String, Vec<f64>>, sense: Sense) -> Result<RankingTable> {
    let Some(sessions) = results.values().next().map(Vec::len) else {
        return Err(Error::InsufficientData("no optimizers".into()));
    };
    if sessions == 0 || results.values().any(|v| v.len() != sessions) {
        return Err(Error::InvalidArgument("every optimizer needs the same positive number of sessions".into()));
    }
    let names: Vec<&String> = results.keys().collect();
    let sorted: Vec<Vec<f64>> = results
        .values()
        .map(|v| {
            let mut s = v.clone();
            s.sort_by(|a, b| sense.loss(*a).total_cmp(&sense.loss(*b)));
            s
        })
        .collect();
    let mut round_ranks: BTreeMap<String, Vec<f64>> = names.iter().map(|n| ((*n).clone(), Vec::new())).collect();
    for round in 0..sessions {
        let column: Vec<f64> = sorted.iter().map(|s| s[round]).collect();
        for (name, r) in names.iter().zip(tied_ranks(&column, sense)) {
            round_ranks.get_mut(*name).expect("known name").push(r);
        }
    }
    let mean_rank = round_ranks
        .iter()
        .map(|(n, r)| (n.clone(), r.iter().sum::<f64>() / r.len() as f64))
        .collect();
    let quartiles = results
        .iter()
        .map(|(n, v)| quartiles(v).map(|q| (n.clone(), q)))
        .collect::<Result<_>>()?;
    Ok(RankingTable {
        round_ranks,
        mean_rank,
        quartiles,
    })
}

#[cfg(test)]
mod tests;
