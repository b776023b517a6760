//! Acquisition functions and their maximization over mixed spaces.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::math::{norm_cdf, norm_pdf, sqrt};
use crate::optimize::Sense;
use crate::space::{ConfigSpace, Configuration, KnobKind, Scheme, Value};
use crate::surrogate::Surrogate;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcquisitionKind {
    ExpectedImprovement,
    DensityRatio,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcquisitionSpec {
    pub kind: AcquisitionKind,
    pub sense: Sense,
    pub best_observed: f64,
}

/// Expected improvement of `N(mean, std^2)` over `best`.
///
/// For minimization `z = (best - mean) / std` and `EI = std * (z Phi(z) + phi(z))`;
/// maximization mirrors the signs. With `std == 0` the improvement is
/// deterministic.
pub fn expected_improvement(mean: f64, std: f64, best: f64, sense: Sense) -> f64 {
    let gap = match sense {
        Sense::Minimize => best - mean,
        Sense::Maximize => mean - best,
    };
    if !(std > 0.0) {
        return gap.max(0.0);
    }
    let z = gap / std;
    (std * (z * norm_cdf(z) + norm_pdf(z))).max(0.0)
}

/// Settings of the random-plus-local-search acquisition maximizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcquisitionOptimizer {
    /// Uniform random candidates scored first.
    pub n_random: usize,
    /// Number of best observed configurations used as local-search starts.
    pub n_starts: usize,
    /// Standard deviation of numeric neighbor moves, in unit coordinates.
    pub step: f64,
    /// A local search stops after this many non-improving neighborhoods.
    pub max_stall: usize,
    /// Maximum accepted moves per local search.
    pub max_steps: usize,
}

impl Default for AcquisitionOptimizer {
    fn default() -> Self {
        AcquisitionOptimizer {
            n_random: 1000,
            n_starts: 10,
            step: 0.05,
            max_stall: 20,
            max_steps: 50,
        }
    }
}

impl AcquisitionOptimizer {
    /// Returns the highest-scoring configuration among random candidates and
    /// the points visited by local searches started from `starts`.
    ///
    /// Candidates whose [`Configuration::key`] is in `exclude` are scored but
    /// never returned unless nothing else was found. Ties keep the earliest
    /// evaluated candidate.
    pub fn maximize<F, R>(
        &self,
        space: &ConfigSpace,
        mut score: F,
        starts: &[Configuration],
        exclude: &BTreeSet<Vec<u64>>,
        rng: &mut R,
    ) -> (Configuration, f64)
    where
        F: FnMut(&Configuration) -> f64,
        R: Rng + ?Sized,
    {
        let mut best: Option<(Configuration, f64)> = None;
        let mut fallback: Option<(Configuration, f64)> = None;
        let mut consider = |c: &Configuration, s: f64| {
            let s = if s.is_nan() { f64::NEG_INFINITY } else { s };
            let slot = if exclude.contains(&c.key()) {
                &mut fallback
            } else {
                &mut best
            };
            if slot.as_ref().is_none_or(|(_, b)| s > *b) {
                *slot = Some((c.clone(), s));
            }
        };

        for _ in 0..self.n_random {
            let c = space.random_config(rng);
            let s = score(&c);
            consider(&c, s);
        }

        for start in starts.iter().take(self.n_starts) {
            let mut current = start.clone();
            let mut current_score = score(&current);
            consider(&current, current_score);
            let mut stalls = 0;
            let mut steps = 0;
            while steps < self.max_steps && stalls < self.max_stall {
                let mut best_neighbor: Option<(Configuration, f64)> = None;
                for n in self.neighbors(space, &current, rng) {
                    let s = score(&n);
                    consider(&n, s);
                    if best_neighbor.as_ref().is_none_or(|(_, b)| s > *b) {
                        best_neighbor = Some((n, s));
                    }
                }
                match best_neighbor {
                    Some((n, s)) if s > current_score => {
                        current = n;
                        current_score = s;
                        steps += 1;
                    }
                    _ => stalls += 1,
                }
            }
        }

        best.or(fallback)
            .unwrap_or_else(|| {
                let c = space.random_config(rng);
                let s = score(&c);
                (c, s)
            })
    }

    /// One-exchange neighborhood: a Gaussian move on each numeric knob and
    /// every alternative category of each categorical knob.
    pub fn neighbors<R: Rng + ?Sized>(
        &self,
        space: &ConfigSpace,
        config: &Configuration,
        rng: &mut R,
    ) -> Vec<Configuration> {
        let mut out = Vec::new();
        for (i, knob) in space.knobs().iter().enumerate() {
            let v = config.values()[i];
            match knob.kind() {
                KnobKind::Categorical { categories } => {
                    for c in 0..categories.len() {
                        if Value::Category(c) != v {
                            let mut n = config.clone();
                            n.values_mut()[i] = Value::Category(c);
                            out.push(n);
                        }
                    }
                }
                kind => {
                    let u = knob.to_unit(&v);
                    let mut moved = knob.from_unit(u + self.step * crate::math::standard_normal(rng));
                    if moved == v {
                        if let (KnobKind::Integer { lower, upper }, Value::Int(x)) = (kind, v) {
                            let dir = if rng.gen::<bool>() { 1 } else { -1 };
                            let y = (x + dir).clamp(*lower, *upper);
                            moved = Value::Int(if y == x { (x - dir).clamp(*lower, *upper) } else { y });
                        }
                    }
                    if moved != v {
                        let mut n = config.clone();
                        n.values_mut()[i] = moved;
                        out.push(n);
                    }
                }
            }
        }
        out.shuffle(rng);
        out
    }
}

/// Maximizes expected improvement of `surrogate` (queried in `scheme`
/// encoding) with the default maximizer settings, `budget` local moves per
/// start and no local-search starts other than the random candidates' best.
pub fn maximize_acquisition<S: Surrogate + ?Sized>(
    space: &ConfigSpace,
    surrogate: &S,
    scheme: Scheme,
    spec: &AcquisitionSpec,
    starts: &[Configuration],
    seed: u64,
    budget: usize,
) -> Configuration {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let optimizer = AcquisitionOptimizer {
        max_steps: budget,
        ..Default::default()
    };
    let mut row = Vec::new();
    let score = |c: &Configuration| {
        row.clear();
        space.encode_into(c, scheme, &mut row);
        let (m, v) = surrogate.predict(&row);
        match spec.kind {
            AcquisitionKind::ExpectedImprovement => {
                expected_improvement(m, sqrt(v.max(0.0)), spec.best_observed, spec.sense)
            }
            AcquisitionKind::DensityRatio => m,
        }
    };
    optimizer
        .maximize(space, score, starts, &BTreeSet::new(), &mut rng)
        .0
}
