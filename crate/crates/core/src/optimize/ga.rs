//! Generational genetic algorithm.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use rand::Rng;

use crate::math::standard_normal;
use crate::space::{ConfigSpace, Configuration, KnobKind, Value};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaParams {
    pub population: usize,
    /// Per-knob mutation probability.
    pub mutation_rate: f64,
    /// Standard deviation of numeric mutations, in unit coordinates.
    pub mutation_step: f64,
}

impl Default for GaParams {
    fn default() -> Self {
        GaParams {
            population: 20,
            mutation_rate: 0.1,
            mutation_step: 0.1,
        }
    }
}

/// Draws a parent index with linear rank weights: the best of `n` has weight
/// `n`, the worst weight 1. `order` lists indices best first.
fn rank_select<R: Rng + ?Sized>(order: &[usize], rng: &mut R) -> usize {
    let n = order.len();
    let total = n * (n + 1) / 2;
    let mut pick = rng.gen_range(0..total);
    for (rank, &i) in order.iter().enumerate() {
        let w = n - rank;
        if pick < w {
            return i;
        }
        pick -= w;
    }
    order[n - 1]
}

/// Uniform crossover: each knob comes from either parent with equal odds.
pub fn crossover<R: Rng + ?Sized>(a: &Configuration, b: &Configuration, rng: &mut R) -> Configuration {
    let values = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| if rng.gen::<bool>() { *x } else { *y })
        .collect();
    Configuration::new(values)
}

/// Mutates each knob independently with probability `params.mutation_rate`.
/// Numeric knobs take a clamped Gaussian step in unit coordinates;
/// categorical knobs are resampled uniformly.
pub fn mutate<R: Rng + ?Sized>(space: &ConfigSpace, config: &mut Configuration, params: &GaParams, rng: &mut R) {
    for (knob, v) in space.knobs().iter().zip(config.values_mut()) {
        if rng.gen::<f64>() >= params.mutation_rate {
            continue;
        }
        *v = match knob.kind() {
            KnobKind::Categorical { categories } => Value::Category(rng.gen_range(0..categories.len())),
            _ => knob.from_unit((knob.to_unit(v) + params.mutation_step * standard_normal(rng)).clamp(0.0, 1.0)),
        };
    }
}

/// Breeds `count` offspring from `parents` ranked by `losses` (lower is
/// better). Offspring matching a key in `avoid` are redrawn a few times.
pub fn breed<R: Rng + ?Sized>(
    space: &ConfigSpace,
    parents: &[Configuration],
    losses: &[f64],
    count: usize,
    params: &GaParams,
    avoid: &BTreeSet<Vec<u64>>,
    rng: &mut R,
) -> Vec<Configuration> {
    let mut order: Vec<usize> = (0..parents.len()).collect();
    order.sort_by(|&a, &b| losses[a].total_cmp(&losses[b]).then(a.cmp(&b)));
    let mut seen = avoid.clone();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut child = None;
        for _ in 0..10 {
            let a = rank_select(&order, rng);
            let b = rank_select(&order, rng);
            let mut c = crossover(&parents[a], &parents[b], rng);
            mutate(space, &mut c, params, rng);
            let fresh = !seen.contains(&c.key());
            child = Some(c);
            if fresh {
                break;
            }
        }
        let c = child.expect("at least one attempt");
        seen.insert(c.key());
        out.push(c);
    }
    out
}

#[derive(Debug, Clone)]
pub(super) struct GaState {
    population: Vec<Configuration>,
    losses: Vec<Option<f64>>,
    next_emit: usize,
    generation: usize,
    /// Every observed configuration, for duplicate avoidance and fallback breeding.
    archive: Vec<(Configuration, f64)>,
}

impl GaState {
    pub(super) fn new(population: Vec<Configuration>) -> Self {
        let n = population.len();
        GaState {
            population,
            losses: alloc::vec![None; n],
            next_emit: 0,
            generation: 0,
            archive: Vec::new(),
        }
    }

    pub(super) fn generation(&self) -> usize {
        self.generation
    }

    pub(super) fn suggest<R: Rng + ?Sized>(
        &mut self,
        space: &ConfigSpace,
        params: &GaParams,
        rng: &mut R,
    ) -> Configuration {
        if self.next_emit < self.population.len() {
            self.next_emit += 1;
            return self.population[self.next_emit - 1].clone();
        }
        // The whole generation is out but not yet observed: breed one extra
        // child from everything observed so far.
        if self.archive.is_empty() {
            return space.random_config(rng);
        }
        let (parents, losses): (Vec<Configuration>, Vec<f64>) = self.archive.iter().cloned().unzip();
        let avoid = parents.iter().map(|c| c.key()).collect();
        breed(space, &parents, &losses, 1, params, &avoid, rng).remove(0)
    }

    pub(super) fn observe<R: Rng + ?Sized>(
        &mut self,
        config: Configuration,
        loss: f64,
        space: &ConfigSpace,
        params: &GaParams,
        rng: &mut R,
    ) {
        let key = config.key();
        if let Some(i) = (0..self.population.len())
            .find(|&i| self.losses[i].is_none() && self.population[i].key() == key)
        {
            self.losses[i] = Some(loss);
        }
        self.archive.push((config, loss));
        if self.losses.iter().all(Option::is_some) {
            let losses: Vec<f64> = self.losses.iter().map(|l| l.unwrap_or(f64::INFINITY)).collect();
            let avoid = self.archive.iter().map(|(c, _)| c.key()).collect();
            let count = self.population.len();
            self.population = breed(space, &self.population, &losses, count, params, &avoid, rng);
            self.losses = alloc::vec![None; count];
            self.next_emit = 0;
            self.generation += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::KnobSpec;
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn space() -> ConfigSpace {
        ConfigSpace::new(
            "s",
            vec![
                KnobSpec::continuous("x", 0.0, 1.0, 0.0).unwrap(),
                KnobSpec::integer("n", 0, 100, 0).unwrap(),
                KnobSpec::categorical("c", ["a", "b", "c", "d"], 0).unwrap(),
            ],
        )
        .unwrap()
    }

    #[test]
    fn crossover_takes_parent_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = Configuration::new(vec![Value::Real(0.1), Value::Int(1), Value::Category(0)]);
        let b = Configuration::new(vec![Value::Real(0.9), Value::Int(99), Value::Category(3)]);
        for _ in 0..100 {
            let c = crossover(&a, &b, &mut rng);
            for i in 0..3 {
                assert!(c.values()[i] == a.values()[i] || c.values()[i] == b.values()[i]);
            }
        }
    }

    #[test]
    fn zero_rate_mutation_is_identity() {
        let s = space();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = GaParams { mutation_rate: 0.0, ..Default::default() };
        let c0 = s.default_config();
        let mut c = c0.clone();
        mutate(&s, &mut c, &p, &mut rng);
        assert_eq!(c, c0);
    }

    #[test]
    fn full_rate_mutation_stays_valid() {
        let s = space();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = GaParams { mutation_rate: 1.0, ..Default::default() };
        for _ in 0..200 {
            let mut c = s.random_config(&mut rng);
            mutate(&s, &mut c, &p, &mut rng);
            s.validate(&c).unwrap();
        }
    }

    #[test]
    fn rank_selection_prefers_best() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let order = [2, 0, 1];
        let mut counts = [0usize; 3];
        for _ in 0..6000 {
            counts[rank_select(&order, &mut rng)] += 1;
        }
        // weights 3:2:1 for indices 2, 0, 1
        assert!(counts[2] > counts[0] && counts[0] > counts[1]);
        assert!((counts[2] as f64 / 6000.0 - 0.5).abs() < 0.03);
    }
}
