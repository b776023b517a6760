use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::math::{ceil, exp, ln, mean_var, norm_cdf, norm_pdf, sqrt};
use crate::space::{ConfigSpace, Configuration, Value};
use crate::{Error, Result};

const BANDWIDTH_FLOOR: f64 = 1e-3;
/// Weight of the uniform prior component mixed into numeric densities.
const PRIOR_WEIGHT: f64 = 1.0;
/// Floor applied to the bad-side density in the score.
pub const DENSITY_FLOOR: f64 = 1e-12;

/// Density of one knob, on unit coordinates for numeric knobs.
#[derive(Debug, Clone, PartialEq)]
pub enum KnobDensity {
    /// Mixture of Gaussians truncated to `[0, 1]` plus a uniform prior
    /// component of weight [`PRIOR_WEIGHT`].
    Numeric { centers: Vec<f64>, bandwidth: f64 },
    /// Smoothed category frequencies.
    Categorical { probs: Vec<f64> },
}

impl KnobDensity {
    fn fit_numeric(centers: Vec<f64>) -> Self {
        let n = centers.len() as f64;
        let (_, var) = mean_var(&centers);
        // Silverman's rule of thumb
        let bandwidth = (1.06 * sqrt(var) * libm::pow(n, -0.2)).max(BANDWIDTH_FLOOR);
        KnobDensity::Numeric { centers, bandwidth }
    }

    fn fit_categorical(indices: &[usize], k: usize) -> Self {
        let mut counts = vec![1.0; k];
        for &i in indices {
            counts[i] += 1.0;
        }
        let total = (indices.len() + k) as f64;
        KnobDensity::Categorical {
            probs: counts.into_iter().map(|c| c / total).collect(),
        }
    }

    /// Density at a unit coordinate (numeric) or category index (categorical).
    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            KnobDensity::Numeric { centers, bandwidth } => {
                if !(0.0..=1.0).contains(&x) {
                    return 0.0;
                }
                let h = *bandwidth;
                let kernels: f64 = centers
                    .iter()
                    .map(|c| norm_pdf((x - c) / h) / (h * truncation_mass(*c, h)))
                    .sum();
                (kernels + PRIOR_WEIGHT) / (centers.len() as f64 + PRIOR_WEIGHT)
            }
            KnobDensity::Categorical { probs } => {
                let i = x as usize;
                if x < 0.0 || i >= probs.len() {
                    0.0
                } else {
                    probs[i]
                }
            }
        }
    }

    /// Draws a unit coordinate or category index.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            KnobDensity::Numeric { centers, bandwidth } => {
                let total = centers.len() as f64 + PRIOR_WEIGHT;
                let pick = rng.gen::<f64>() * total;
                let component = pick as usize;
                if component >= centers.len() {
                    return rng.gen::<f64>();
                }
                let c = centers[component];
                for _ in 0..64 {
                    let v = c + bandwidth * crate::math::standard_normal(rng);
                    if (0.0..=1.0).contains(&v) {
                        return v;
                    }
                }
                c
            }
            KnobDensity::Categorical { probs } => {
                let mut u = rng.gen::<f64>();
                for (i, p) in probs.iter().enumerate() {
                    if u < *p {
                        return i as f64;
                    }
                    u -= p;
                }
                (probs.len() - 1) as f64
            }
        }
    }
}

fn truncation_mass(c: f64, h: f64) -> f64 {
    (norm_cdf((1.0 - c) / h) - norm_cdf(-c / h)).max(1e-300)
}

/// Good/bad density pair of the tree-structured Parzen estimator.
///
/// Knobs are modelled independently: the joint density is the product of the
/// per-knob densities.
#[derive(Debug, Clone, PartialEq)]
pub struct ParzenPair {
    pub good: Vec<KnobDensity>,
    pub bad: Vec<KnobDensity>,
    pub gamma: f64,
    pub n_good: usize,
}

impl ParzenPair {
    /// Splits observations at the `gamma` quantile of `losses` (lower is
    /// better) and fits both densities. The good set holds the best
    /// `ceil(gamma * n)` observations; ties keep observation order.
    pub fn fit(space: &ConfigSpace, configs: &[Configuration], losses: &[f64], gamma: f64) -> Result<Self> {
        if configs.len() != losses.len() {
            return Err(Error::InvalidArgument("configs and losses lengths differ".into()));
        }
        let n = configs.len();
        if n < 2 {
            return Err(Error::InsufficientData("TPE needs two observations".into()));
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::InvalidArgument("gamma must lie in (0, 1)".into()));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| losses[a].total_cmp(&losses[b]).then(a.cmp(&b)));
        let n_good = (ceil(gamma * n as f64 - 1e-9) as usize).clamp(1, n - 1);
        let (good_idx, bad_idx) = order.split_at(n_good);
        let fit_side = |idx: &[usize]| -> Vec<KnobDensity> {
            space
                .knobs()
                .iter()
                .enumerate()
                .map(|(k, knob)| match knob.cardinality() {
                    Some(card) => {
                        let cats: Vec<usize> = idx
                            .iter()
                            .map(|&i| match configs[i].values()[k] {
                                Value::Category(c) => c,
                                other => other.as_f64() as usize,
                            })
                            .collect();
                        KnobDensity::fit_categorical(&cats, card)
                    }
                    None => KnobDensity::fit_numeric(
                        idx.iter().map(|&i| knob.to_unit(&configs[i].values()[k])).collect(),
                    ),
                })
                .collect()
        };
        Ok(ParzenPair {
            good: fit_side(good_idx),
            bad: fit_side(bad_idx),
            gamma,
            n_good,
        })
    }

    fn coordinates(space: &ConfigSpace, config: &Configuration) -> Vec<f64> {
        space
            .knobs()
            .iter()
            .zip(config.values())
            .map(|(k, v)| match v {
                Value::Category(c) => *c as f64,
                v => k.to_unit(v),
            })
            .collect()
    }

    fn log_density(side: &[KnobDensity], coords: &[f64]) -> f64 {
        side.iter().zip(coords).map(|(d, x)| ln(d.pdf(*x).max(1e-300))).sum()
    }

    /// `l(x) / max(g(x), eps)`.
    pub fn score(&self, space: &ConfigSpace, config: &Configuration) -> f64 {
        let coords = Self::coordinates(space, config);
        let log_l = Self::log_density(&self.good, &coords);
        let log_g = Self::log_density(&self.bad, &coords).max(ln(DENSITY_FLOOR));
        exp((log_l - log_g).min(700.0))
    }

    /// Draws a configuration from the good density, knob by knob.
    pub fn sample_good<R: Rng + ?Sized>(&self, space: &ConfigSpace, rng: &mut R) -> Configuration {
        let values = space
            .knobs()
            .iter()
            .zip(&self.good)
            .map(|(k, d)| {
                let x = d.sample(rng);
                if k.is_categorical() {
                    Value::Category(x as usize)
                } else {
                    k.from_unit(x)
                }
            })
            .collect();
        Configuration::new(values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::KnobSpec;

    fn space() -> ConfigSpace {
        ConfigSpace::new(
            "s",
            vec![
                KnobSpec::continuous("x", 0.0, 1.0, 0.5).unwrap(),
                KnobSpec::categorical("c", ["a", "b", "c"], 0).unwrap(),
            ],
        )
        .unwrap()
    }

    fn obs(n: usize) -> (Vec<Configuration>, Vec<f64>) {
        let configs = (0..n)
            .map(|i| Configuration::new(vec![Value::Real(i as f64 / n as f64), Value::Category(i % 3)]))
            .collect();
        (configs, (0..n).map(|i| i as f64).collect())
    }

    #[test]
    fn quantile_split() {
        let s = space();
        let (c, y) = obs(8);
        let p = ParzenPair::fit(&s, &c, &y, 0.25).unwrap();
        assert_eq!(p.n_good, 2);
        assert!(ParzenPair::fit(&s, &c[..1], &y[..1], 0.25).is_err());
    }

    #[test]
    fn ties_keep_order() {
        let s = space();
        let (c, _) = obs(8);
        let p = ParzenPair::fit(&s, &c, &[1.0; 8], 0.25).unwrap();
        // good set = first two observations: x in {0, 0.125}
        match &p.good[0] {
            KnobDensity::Numeric { centers, .. } => assert_eq!(centers, &vec![0.0, 0.125]),
            _ => unreachable!(),
        }
    }

    #[test]
    fn categorical_probabilities_sum_to_one() {
        let s = space();
        let (c, y) = obs(9);
        let p = ParzenPair::fit(&s, &c, &y, 0.25).unwrap();
        for side in [&p.good, &p.bad] {
            if let KnobDensity::Categorical { probs } = &side[1] {
                assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn identical_sides_score_one() {
        let s = space();
        let (c, y) = obs(6);
        let mut p = ParzenPair::fit(&s, &c, &y, 0.5).unwrap();
        p.bad = p.good.clone();
        for cfg in &c {
            assert_eq!(p.score(&s, cfg), 1.0);
        }
    }

    #[test]
    fn good_mode_scores_above_one() {
        let s = space();
        let (c, y) = obs(12);
        let p = ParzenPair::fit(&s, &c, &y, 0.25).unwrap();
        let at_mode = Configuration::new(vec![Value::Real(0.1), Value::Category(0)]);
        let far = Configuration::new(vec![Value::Real(0.9), Value::Category(2)]);
        assert!(p.score(&s, &at_mode) > 1.0);
        assert!(p.score(&s, &far) < 1.0);
        assert!(p.score(&s, &far).is_finite());
    }
}
