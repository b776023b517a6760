//! Analytic objectives with known optima.
//!
//! A [`SyntheticFunction`] is a sum of per-knob terms plus at most one
//! multiplicative interaction between two quadratic terms. The interaction
//! vanishes where both quadratic terms are minimal, so the optimum is the
//! configuration minimizing each term separately.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::optimize::Sense;
use crate::space::{ConfigSpace, Configuration, KnobKind, KnobSpec, Value};
use crate::{Error, Result};

/// Contribution of one knob.
#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    /// `weight * (u - center)^2` over the knob's unit coordinate `u`.
    Quadratic { knob: usize, weight: f64, center: Value },
    /// `weight * u`, minimal at the lower bound for positive weights.
    Linear { knob: usize, weight: f64 },
    /// Offset per category index.
    Offsets { knob: usize, offsets: Vec<f64> },
}

/// `weight * q_a * q_b` where `q` are the unit-weight squared distances of
/// two quadratic terms; zero at the optimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interaction {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticFunction {
    pub name: String,
    pub space: ConfigSpace,
    pub sense: Sense,
    pub terms: Vec<Term>,
    pub interaction: Option<Interaction>,
}

impl SyntheticFunction {
    fn unit_sq(&self, knob: usize, v: &Value, center: &Value) -> f64 {
        let k = &self.space.knobs()[knob];
        let d = k.to_unit(v) - k.to_unit(center);
        d * d
    }

    fn quadratic_part(&self, knob: usize, config: &Configuration) -> f64 {
        self.terms
            .iter()
            .find_map(|t| match t {
                Term::Quadratic { knob: k, center, .. } if *k == knob => {
                    Some(self.unit_sq(knob, &config.values()[knob], center))
                }
                _ => None,
            })
            .unwrap_or(0.0)
    }

    /// Objective value; larger is worse for [`Sense::Minimize`]. Maximize
    /// variants return the negated sum.
    pub fn evaluate(&self, config: &Configuration) -> Result<f64> {
        self.space.validate(config)?;
        let v = config.values();
        let mut total = 0.0;
        for t in &self.terms {
            total += match t {
                Term::Quadratic { knob, weight, center } => weight * self.unit_sq(*knob, &v[*knob], center),
                Term::Linear { knob, weight } => weight * self.space.knobs()[*knob].to_unit(&v[*knob]),
                Term::Offsets { knob, offsets } => match v[*knob] {
                    Value::Category(c) => offsets[c],
                    _ => 0.0,
                },
            };
        }
        if let Some(i) = self.interaction {
            total += i.weight * self.quadratic_part(i.a, config) * self.quadratic_part(i.b, config);
        }
        Ok(match self.sense {
            Sense::Minimize => total,
            Sense::Maximize => -total,
        })
    }

    /// Optimal configuration and value. Knobs without a term keep their default.
    pub fn optimum(&self) -> (Configuration, f64) {
        let mut c = self.space.default_config();
        for t in &self.terms {
            match t {
                Term::Quadratic { knob, center, .. } => c.values_mut()[*knob] = *center,
                Term::Linear { knob, weight } => {
                    let k = &self.space.knobs()[*knob];
                    c.values_mut()[*knob] = k.from_unit(if *weight >= 0.0 { 0.0 } else { 1.0 });
                }
                Term::Offsets { knob, offsets } => {
                    let best = (0..offsets.len())
                        .min_by(|a, b| offsets[*a].total_cmp(&offsets[*b]))
                        .unwrap_or(0);
                    c.values_mut()[*knob] = Value::Category(best);
                }
            }
        }
        let v = self.evaluate(&c).expect("optimum is valid");
        (c, v)
    }

    /// Latin hypercube dataset of `n` evaluations.
    pub fn sample_dataset(&self, n: usize, seed: u64) -> (Vec<Configuration>, Vec<f64>) {
        let configs = self.space.lhs_sample(n, seed);
        let y = configs.iter().map(|c| self.evaluate(c).expect("samples are valid")).collect();
        (configs, y)
    }
}

const INT_UPPER: [i64; 20] = [
    64, 100, 128, 200, 256, 500, 512, 1000, 1024, 2000, 16, 32, 48, 80, 96, 150, 300, 400, 600, 800,
];
const CAT_SIZES: [usize; 5] = [4, 5, 6, 3, 8];

/// Weight of the `i`-th quadratic term; decays so knobs differ in importance.
fn quad_weight(i: usize) -> f64 {
    10.0 * libm::pow(0.8, i as f64)
}

/// Center of the `i`-th integer knob, spread over the interior of the range.
fn quad_center(i: usize, upper: i64) -> i64 {
    let u = ((i * 7 + 3) % 10) as f64 / 10.0 + 0.05;
    libm::round(u * upper as f64) as i64
}

fn integer_knobs(count: usize) -> (Vec<KnobSpec>, Vec<Term>) {
    let mut knobs = Vec::new();
    let mut terms = Vec::new();
    for i in 0..count {
        let upper = INT_UPPER[i];
        knobs.push(KnobSpec::integer(format!("int_{i:02}"), 0, upper, upper / 2).expect("valid knob"));
        terms.push(Term::Quadratic {
            knob: i,
            weight: quad_weight(i),
            center: Value::Int(quad_center(i, upper)),
        });
    }
    (knobs, terms)
}

/// 20-knob mixed space: 15 integer knobs with quadratic terms and 5
/// categorical knobs whose offsets are a fixed shuffle of an even grid, so
/// category indices carry no ordinal information. One interaction couples
/// the first two integer knobs. Minimized; the optimum value is 0.
pub fn heterogeneous() -> SyntheticFunction {
    let (mut knobs, mut terms) = integer_knobs(15);
    // fixed, deliberately non-monotone category orders
    let orders: [&[usize]; 5] = [&[2, 0, 3, 1], &[3, 1, 4, 0, 2], &[1, 4, 0, 5, 2, 3], &[1, 2, 0], &[5, 2, 7, 0, 3, 6, 1, 4]];
    let scales = [6.0, 5.0, 4.0, 3.0, 2.5];
    for (j, &k) in CAT_SIZES.iter().enumerate() {
        let labels: Vec<String> = (0..k).map(|c| format!("opt{c}")).collect();
        let idx = knobs.len();
        knobs.push(KnobSpec::categorical(format!("cat_{j}"), labels, 0).expect("valid knob"));
        let offsets = orders[j]
            .iter()
            .map(|rank| scales[j] * *rank as f64 / (k - 1) as f64)
            .collect();
        terms.push(Term::Offsets { knob: idx, offsets });
    }
    SyntheticFunction {
        name: "heterogeneous".into(),
        space: ConfigSpace::new("heterogeneous", knobs).expect("unique names"),
        sense: Sense::Minimize,
        terms,
        interaction: Some(Interaction { a: 0, b: 1, weight: 8.0 }),
    }
}

/// Integer-only counterpart of [`heterogeneous`]: the categorical knobs are
/// replaced by five more integer knobs with quadratic terms.
pub fn integer_control() -> SyntheticFunction {
    let (knobs, terms) = integer_knobs(20);
    SyntheticFunction {
        name: "integer_control".into(),
        space: ConfigSpace::new("integer_control", knobs).expect("unique names"),
        sense: Sense::Minimize,
        terms,
        interaction: Some(Interaction { a: 0, b: 1, weight: 8.0 }),
    }
}

/// Additive linear family for importance checks, maximized.
///
/// `m` knobs of mixed types with defaults at their lower bounds. One knob,
/// chosen by `seed`, has weight 10; the others have weights 1, 1/2, 1/4, ...
/// so the dominant knob explains over 95% of the variance under uniform
/// inputs. Returns the function and the dominant knob's index.
pub fn additive(m: usize, seed: u64) -> Result<(SyntheticFunction, usize)> {
    if m < 2 {
        return Err(Error::InvalidArgument("additive family needs at least two knobs".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dominant = rng.gen_range(0..m);
    let mut minor: Vec<usize> = (0..m).filter(|&i| i != dominant).collect();
    minor.shuffle(&mut rng);
    let mut knobs = Vec::with_capacity(m);
    let mut terms = Vec::with_capacity(m);
    for i in 0..m {
        let weight = if i == dominant {
            10.0
        } else {
            let r = minor.iter().position(|&k| k == i).expect("minor knob");
            libm::pow(0.5, r as f64)
        };
        let name = format!("k{i}");
        let kind = if i == dominant { 0 } else { i % 3 };
        match kind {
            0 => {
                knobs.push(KnobSpec::continuous(name, 0.0, 1.0, 0.0).expect("valid knob"));
                terms.push(Term::Linear { knob: i, weight: -weight });
            }
            1 => {
                knobs.push(KnobSpec::integer(name, 0, 50, 0).expect("valid knob"));
                terms.push(Term::Linear { knob: i, weight: -weight });
            }
            _ => {
                let k = 4;
                knobs.push(KnobSpec::categorical(name, (0..k).map(|c| format!("c{c}")), 0).expect("valid knob"));
                // linear in index on the negated (maximized) scale
                let offsets = (0..k).map(|c| -weight * c as f64 / (k - 1) as f64).collect();
                terms.push(Term::Offsets { knob: i, offsets });
            }
        }
    }
    let f = SyntheticFunction {
        name: format!("additive_{m}_{seed}"),
        space: ConfigSpace::new(format!("additive_{m}"), knobs)?,
        sense: Sense::Maximize,
        terms,
        interaction: None,
    };
    Ok((f, dominant))
}

/// `y = sum_i w_i * u_i` over continuous knobs, for regression checks.
pub fn linear(weights: &[f64]) -> SyntheticFunction {
    let knobs = (0..weights.len())
        .map(|i| KnobSpec::continuous(format!("x{i}"), 0.0, 1.0, 0.5).expect("valid knob"))
        .collect();
    SyntheticFunction {
        name: "linear".into(),
        space: ConfigSpace::new("linear", knobs).expect("unique names"),
        sense: Sense::Minimize,
        terms: weights
            .iter()
            .enumerate()
            .map(|(i, w)| Term::Linear { knob: i, weight: *w })
            .collect(),
        interaction: None,
    }
}

/// Whether every term of `f` refers to a knob of the matching kind.
pub fn is_consistent(f: &SyntheticFunction) -> bool {
    f.terms.iter().all(|t| match t {
        Term::Quadratic { knob, center, .. } => f.space.knobs().get(*knob).is_some_and(|k| k.contains(center)),
        Term::Linear { knob, .. } => f
            .space
            .knobs()
            .get(*knob)
            .is_some_and(|k| !matches!(k.kind(), KnobKind::Categorical { .. })),
        Term::Offsets { knob, offsets } => f.space.knobs().get(*knob).and_then(|k| k.cardinality()) == Some(offsets.len()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heterogeneous_shape_and_optimum() {
        let f = heterogeneous();
        assert!(is_consistent(&f));
        let ints = f.space.knobs().iter().filter(|k| matches!(k.kind(), KnobKind::Integer { .. })).count();
        let cats = f.space.knobs().iter().filter(|k| k.is_categorical()).count();
        assert_eq!((ints, cats), (15, 5));
        let (best, v) = f.optimum();
        assert_eq!(v, 0.0);
        let (configs, y) = f.sample_dataset(200, 1);
        for (c, y) in configs.iter().zip(&y) {
            assert!(*y > 0.0 || c == &best);
        }
    }

    #[test]
    fn category_order_is_not_monotone() {
        let f = heterogeneous();
        for t in &f.terms {
            if let Term::Offsets { offsets, .. } = t {
                let inc = offsets.windows(2).all(|w| w[0] <= w[1]);
                let dec = offsets.windows(2).all(|w| w[0] >= w[1]);
                assert!(!inc && !dec);
            }
        }
    }

    #[test]
    fn control_is_integer_only() {
        let f = integer_control();
        assert!(is_consistent(&f));
        assert!(!f.space.has_categorical());
        assert_eq!(f.space.len(), 20);
        assert_eq!(f.optimum().1, 0.0);
    }

    #[test]
    fn additive_dominance() {
        for seed in 0..10 {
            let (f, d) = additive(6, seed).unwrap();
            assert!(is_consistent(&f));
            let (configs, y) = f.sample_dataset(400, seed);
            // variance explained by the dominant term alone
            let dom: Vec<f64> = configs
                .iter()
                .map(|c| {
                    let single = SyntheticFunction {
                        terms: vec![f.terms[d].clone()],
                        ..f.clone()
                    };
                    single.evaluate(c).unwrap()
                })
                .collect();
            let (_, vy) = crate::math::mean_var(&y);
            let (_, vd) = crate::math::mean_var(&dom);
            assert!(vd / vy > 0.9, "seed {seed}: {}", vd / vy);
            assert!(f.optimum().1 >= y.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        }
    }

    #[test]
    fn linear_values() {
        let f = linear(&[2.0, -1.0]);
        let c = Configuration::new(vec![Value::Real(0.5), Value::Real(1.0)]);
        assert_eq!(f.evaluate(&c).unwrap(), 0.0);
    }

    use alloc::vec;
}
