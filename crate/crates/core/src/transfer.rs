//! Knowledge transfer across tuning tasks.
//!
//! Ranking-weighted GP ensembles combine base-task surrogates with the target
//! surrogate; weights are the probability that each model has the lowest
//! ranking loss on the target observations, estimated by bootstrap
//! resampling. Workload mapping picks the source task whose metrics profile is
//! closest to the target's.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::math::{mean_var, sqrt};
use crate::optimize::Sense;
use crate::space::Configuration;
use crate::surrogate::{GpModel, Surrogate};
use crate::{Error, Result};

/// Observations of a previously tuned task.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseTask {
    pub task_id: String,
    /// Successful configurations in the target space and their values.
    pub configs: Vec<Configuration>,
    pub values: Vec<f64>,
    /// Mean internal-metrics vector observed while tuning the task.
    pub metrics_profile: Option<Vec<f64>>,
}

/// Number of misranked ordered pairs:
/// `sum_j sum_k [(m_j <= m_k) xor (y_j <= y_k)]`.
pub fn ranking_loss(predictions: &[f64], targets: &[f64]) -> Result<u64> {
    if predictions.len() != targets.len() {
        return Err(Error::InvalidArgument("predictions and targets lengths differ".into()));
    }
    if targets.len() < 2 {
        return Err(Error::InsufficientData("ranking loss needs two observations".into()));
    }
    let idx: Vec<usize> = (0..targets.len()).collect();
    Ok(resampled_loss(predictions, targets, &idx))
}

/// Ranking loss of `model` on encoded target points.
pub fn ranking_loss_of<S: Surrogate + ?Sized>(model: &S, x: &[Vec<f64>], y: &[f64]) -> Result<u64> {
    let preds: Vec<f64> = x.iter().map(|r| model.predict(r).0).collect();
    ranking_loss(&preds, y)
}

fn resampled_loss(pred: &[f64], y: &[f64], idx: &[usize]) -> u64 {
    let mut loss = 0;
    for &j in idx {
        for &k in idx {
            if (pred[j] <= pred[k]) != (y[j] <= y[k]) {
                loss += 1;
            }
        }
    }
    loss
}

/// Weights from per-candidate predictions on the target points.
///
/// Each of `samples` bootstrap resamples of the target points awards `1 / S`
/// to the candidate with the smallest ranking loss, split equally on ties.
pub fn rgpe_weights_from_predictions(
    candidates: &[Vec<f64>],
    y: &[f64],
    samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("no candidate models".into()));
    }
    if y.len() < 3 {
        return Err(Error::InsufficientData("ensemble weights need three target observations".into()));
    }
    if candidates.iter().any(|c| c.len() != y.len()) {
        return Err(Error::InvalidArgument("candidate predictions do not match targets".into()));
    }
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be positive".into()));
    }
    let mut weights = vec![0.0; candidates.len()];
    if candidates.len() == 1 {
        weights[0] = 1.0;
        return Ok(weights);
    }
    let n = y.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = vec![0; n];
    let mut losses = vec![0u64; candidates.len()];
    for _ in 0..samples {
        idx.iter_mut().for_each(|i| *i = rng.gen_range(0..n));
        for (l, c) in losses.iter_mut().zip(candidates) {
            *l = resampled_loss(c, y, &idx);
        }
        let min = *losses.iter().min().unwrap_or(&0);
        let winners = losses.iter().filter(|l| **l == min).count() as f64;
        for (w, l) in weights.iter_mut().zip(&losses) {
            if *l == min {
                *w += 1.0 / winners;
            }
        }
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    Ok(weights)
}

/// Weights of `bases` followed by the target model (last entry).
///
/// The target model is scored with leave-one-out predictions so that its
/// own training points do not give it a trivially perfect ranking.
pub fn rgpe_weights(
    bases: &[&dyn Surrogate],
    target_x: &[Vec<f64>],
    target_y: &[f64],
    target_model: &GpModel,
    samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if target_model.len() != target_y.len() {
        return Err(Error::InvalidArgument("target model must be fitted on the target history".into()));
    }
    let mut candidates: Vec<Vec<f64>> = bases
        .iter()
        .map(|b| target_x.iter().map(|r| b.predict(r).0).collect())
        .collect();
    candidates.push(target_model.loo_means());
    rgpe_weights_from_predictions(&candidates, target_y, samples, seed)
}

/// Weighted mixture `N(sum w_i mu_i, sum w_i sigma_i^2)`.
pub struct EnsembleModel<'a> {
    components: Vec<&'a dyn Surrogate>,
    weights: Vec<f64>,
}

impl<'a> EnsembleModel<'a> {
    pub fn new(components: Vec<&'a dyn Surrogate>, weights: Vec<f64>) -> Result<Self> {
        if components.len() != weights.len() || components.is_empty() {
            return Err(Error::InvalidArgument("one weight per component required".into()));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidArgument("weights must be non-negative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument("weights must sum to one".into()));
        }
        Ok(EnsembleModel { components, weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

impl Surrogate for EnsembleModel<'_> {
    fn predict(&self, x: &[f64]) -> (f64, f64) {
        let mut mean = 0.0;
        let mut var = 0.0;
        for (c, w) in self.components.iter().zip(&self.weights) {
            if *w == 0.0 {
                continue;
            }
            let (m, v) = c.predict(x);
            mean += w * m;
            var += w * v;
        }
        (mean, var.max(0.0))
    }
}

/// Picks the source task whose metrics profile is closest to `target` after
/// standardizing every metric over sources and target. Zero-variance metrics
/// are ignored; ties go to the lowest task id.
pub fn workload_map<'a>(target: &[f64], sources: &'a [BaseTask]) -> Result<&'a BaseTask> {
    if sources.is_empty() {
        return Err(Error::InvalidArgument("no source tasks".into()));
    }
    let dim = target.len();
    let profiles: Vec<&[f64]> = sources
        .iter()
        .map(|s| {
            s.metrics_profile
                .as_deref()
                .ok_or_else(|| Error::InvalidArgument(alloc::format!("task `{}` has no metrics profile", s.task_id)))
        })
        .collect::<Result<_>>()?;
    if profiles.iter().any(|p| p.len() != dim) {
        return Err(Error::InvalidArgument("metrics profiles differ in dimension".into()));
    }
    let mut scales = Vec::with_capacity(dim);
    for d in 0..dim {
        let column: Vec<f64> = profiles.iter().map(|p| p[d]).chain([target[d]]).collect();
        let (mean, var) = mean_var(&column);
        let sd = sqrt(var);
        scales.push(if sd > 1e-12 { Some((mean, sd)) } else { None });
    }
    let distance = |p: &[f64]| -> f64 {
        scales
            .iter()
            .enumerate()
            .filter_map(|(d, s)| s.map(|(m, sd)| (p[d] - m) / sd - (target[d] - m) / sd))
            .map(|v| v * v)
            .sum::<f64>()
    };
    let mut best = 0;
    let mut best_dist = distance(profiles[0]);
    for i in 1..sources.len() {
        let dist = distance(profiles[i]);
        if dist < best_dist || (dist == best_dist && sources[i].task_id < sources[best].task_id) {
            best = i;
            best_dist = dist;
        }
    }
    Ok(&sources[best])
}

/// Relative performance enhancement `(with - without) / without`.
pub fn transfer_pe(best_with: f64, best_without: f64) -> Result<f64> {
    if best_without == 0.0 {
        return Err(Error::InvalidArgument("baseline performance is zero".into()));
    }
    Ok((best_with - best_without) / best_without)
}

/// Speedup of a transfer run over its non-transfer baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Speedup {
    Ratio(f64),
    /// The transfer run never surpassed the baseline's best.
    NotSurpassed,
}

pub fn transfer_speedup(steps_base: usize, steps_transfer: Option<usize>) -> Result<Speedup> {
    if steps_base == 0 {
        return Err(Error::InvalidArgument("steps_base must be at least 1".into()));
    }
    Ok(match steps_transfer {
        Some(s) if s > 0 => Speedup::Ratio(steps_base as f64 / s as f64),
        _ => Speedup::NotSurpassed,
    })
}

/// 1-based step at which the best value of `values` was first reached.
pub fn steps_to_best(values: &[f64], sense: Sense) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.iter().enumerate() {
        if best.is_none_or(|(_, b)| sense.is_better(*v, b)) {
            best = Some((i, *v));
        }
    }
    best.map(|(i, _)| i + 1)
}

/// 1-based step at which `values` first becomes strictly better than `threshold`.
pub fn steps_to_surpass(values: &[f64], threshold: f64, sense: Sense) -> Option<usize> {
    values.iter().position(|v| sense.is_better(*v, threshold)).map(|i| i + 1)
}
