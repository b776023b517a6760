//! Trust-region BO with several independent local regions.
//!
//! Each region keeps its own observations and GP. Candidates are drawn inside
//! each region's box around its center; one Thompson draw per candidate from
//! the region GP's marginal picks both the region and the configuration.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{History, SessionOptions};
use crate::math::{sqrt, standard_normal};
use crate::space::{ConfigSpace, Configuration, Scheme, Value};
use crate::surrogate::{fit_hypers, GpModel, HyperSearch, KernelFamily, Surrogate};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurboParams {
    pub regions: usize,
    pub length_init: f64,
    pub length_min: f64,
    pub length_max: f64,
    pub success_tolerance: usize,
    pub failure_tolerance: usize,
    /// Candidates drawn per region and suggestion.
    pub candidates: usize,
    /// Relative margin a new value must beat the center by to count as a success.
    pub improvement_margin: f64,
}

impl Default for TurboParams {
    fn default() -> Self {
        TurboParams {
            regions: 3,
            length_init: 0.8,
            length_min: 1.0 / 64.0,
            length_max: 1.6,
            success_tolerance: 3,
            failure_tolerance: 5,
            candidates: 300,
            improvement_margin: 1e-3,
        }
    }
}

/// Outcome of recording one evaluation in a region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionEvent {
    Unchanged,
    Expanded,
    Shrunk,
    /// The length fell below the minimum; the region must restart.
    Collapsed,
}

/// One trust region. `length` is the box side in unit coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct TrustRegionState {
    pub region_id: usize,
    pub center: Option<Configuration>,
    pub center_loss: f64,
    pub length: f64,
    pub success_count: usize,
    pub failure_count: usize,
    pub restarts: usize,
    /// History indices owned by this region since its last restart.
    pub members: Vec<usize>,
}

impl TrustRegionState {
    pub fn new(region_id: usize, params: &TurboParams) -> Self {
        TrustRegionState {
            region_id,
            center: None,
            center_loss: f64::INFINITY,
            length: params.length_init,
            success_count: 0,
            failure_count: 0,
            restarts: 0,
            members: Vec::new(),
        }
    }

    /// Updates the counters after an evaluation that did or did not improve on
    /// the center, resizing the box when a tolerance is reached.
    pub fn record(&mut self, improved: bool, params: &TurboParams) -> RegionEvent {
        if improved {
            self.success_count += 1;
            self.failure_count = 0;
        } else {
            self.failure_count += 1;
            self.success_count = 0;
        }
        if self.success_count >= params.success_tolerance {
            self.success_count = 0;
            self.length = (2.0 * self.length).min(params.length_max);
            RegionEvent::Expanded
        } else if self.failure_count >= params.failure_tolerance {
            self.failure_count = 0;
            self.length /= 2.0;
            if self.length < params.length_min {
                RegionEvent::Collapsed
            } else {
                RegionEvent::Shrunk
            }
        } else {
            RegionEvent::Unchanged
        }
    }

    /// Whether `config` lies in the box: every numeric unit coordinate within
    /// `length / 2` of the center's, and at most [`Self::hamming_radius`]
    /// categorical knobs differing from it.
    pub fn contains(&self, space: &ConfigSpace, config: &Configuration) -> bool {
        let Some(center) = &self.center else { return true };
        let mut changed = 0;
        for (k, (a, b)) in space.knobs().iter().zip(config.values().iter().zip(center.values())) {
            if k.is_categorical() {
                changed += usize::from(a != b);
            } else if (k.to_unit(a) - k.to_unit(b)).abs() > self.length / 2.0 + 1e-12 {
                return false;
            }
        }
        changed <= self.hamming_radius(space)
    }

    /// Number of categorical knobs a candidate may change, scaled with the
    /// box length and at least 1.
    pub fn hamming_radius(&self, space: &ConfigSpace) -> usize {
        let n_cat = space.knobs().iter().filter(|k| k.is_categorical()).count();
        let r = crate::math::round(self.length.min(1.0) * n_cat as f64) as usize;
        r.clamp(1.min(n_cat), n_cat)
    }

    fn reset(&mut self, params: &TurboParams) {
        self.center = None;
        self.center_loss = f64::INFINITY;
        self.length = params.length_init;
        self.success_count = 0;
        self.failure_count = 0;
        self.restarts += 1;
        self.members.clear();
    }

    fn candidate<R: Rng + ?Sized>(&self, space: &ConfigSpace, rng: &mut R) -> Configuration {
        let center = self.center.as_ref().expect("region has a center");
        let d = space.len();
        let p_perturb = (20.0 / d as f64).min(1.0);
        let numeric: Vec<usize> = (0..d).filter(|&i| !space.knobs()[i].is_categorical()).collect();
        let mut categorical: Vec<usize> = (0..d).filter(|&i| space.knobs()[i].is_categorical()).collect();
        let mut out = center.clone();
        let mut perturbed = false;
        for &i in &numeric {
            if rng.gen::<f64>() < p_perturb {
                let knob = &space.knobs()[i];
                let c = knob.to_unit(&center.values()[i]);
                let lo = (c - self.length / 2.0).max(0.0);
                let hi = (c + self.length / 2.0).min(1.0);
                let v = knob.from_unit(lo + (hi - lo) * rng.gen::<f64>());
                let u = knob.to_unit(&v);
                if (u - c).abs() <= self.length / 2.0 {
                    out.values_mut()[i] = v;
                    perturbed = true;
                }
            }
        }
        categorical.shuffle(rng);
        let changes = if categorical.is_empty() {
            0
        } else {
            rng.gen_range(usize::from(!perturbed)..=self.hamming_radius(space))
        };
        for &i in categorical.iter().take(changes) {
            let k = space.knobs()[i].cardinality().unwrap_or(1);
            out.values_mut()[i] = Value::Category(rng.gen_range(0..k));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub(super) struct TurboState {
    params: TurboParams,
    restart_size: usize,
    regions: Vec<TrustRegionState>,
    /// Restart designs waiting to be suggested, per region.
    queues: Vec<Vec<Configuration>>,
    /// Owning region of suggested but not yet observed configurations.
    pending: BTreeMap<Vec<u64>, usize>,
    init_owner: Vec<usize>,
}

impl TurboState {
    pub(super) fn new(params: &TurboParams, n_init: usize) -> Self {
        let k = params.regions.max(1);
        TurboState {
            params: *params,
            restart_size: (n_init / k).max(2),
            regions: (0..k).map(|i| TrustRegionState::new(i, params)).collect(),
            queues: alloc::vec![Vec::new(); k],
            pending: BTreeMap::new(),
            init_owner: Vec::new(),
        }
    }

    pub(super) fn regions(&self) -> &[TrustRegionState] {
        &self.regions
    }

    /// Init-design points are dealt to regions round-robin.
    pub(super) fn assign_init(&mut self, index: usize) {
        self.init_owner.push(index % self.regions.len());
    }

    pub(super) fn suggest<R: Rng + ?Sized>(
        &mut self,
        space: &ConfigSpace,
        history: &History,
        options: &SessionOptions,
        rng: &mut R,
    ) -> Configuration {
        for (r, queue) in self.queues.iter_mut().enumerate() {
            if !queue.is_empty() {
                let c = queue.remove(0);
                self.pending.insert(c.key(), r);
                return c;
            }
        }
        let evaluated: alloc::collections::BTreeSet<Vec<u64>> =
            history.records().iter().map(|o| o.config.key()).collect();
        let losses: BTreeMap<usize, f64> = history.training_losses().into_iter().collect();
        let mut best: Option<(f64, usize, Configuration)> = None;
        let mut fallback: Option<(usize, Configuration)> = None;
        for region in &self.regions {
            if region.center.is_none() {
                continue;
            }
            let model = Self::region_model(space, history, &losses, region, options, rng);
            let mut row = Vec::new();
            for _ in 0..self.params.candidates.max(1) {
                let c = region.candidate(space, rng);
                if evaluated.contains(&c.key()) {
                    fallback.get_or_insert((region.region_id, c));
                    continue;
                }
                let draw = match &model {
                    Some(m) => {
                        row.clear();
                        space.encode_into(&c, Scheme::UnitOneHot, &mut row);
                        let (mean, var) = m.predict(&row);
                        mean + sqrt(var.max(0.0)) * standard_normal(rng)
                    }
                    None => rng.gen::<f64>(),
                };
                if best.as_ref().is_none_or(|(b, _, _)| draw < *b) {
                    best = Some((draw, region.region_id, c));
                }
            }
        }
        let (region, config) = match (best, fallback) {
            (Some((_, r, c)), _) => (r, c),
            (None, Some((r, c))) => (r, c),
            (None, None) => (0, space.random_config(rng)),
        };
        self.pending.insert(config.key(), region);
        config
    }

    fn region_model<R: Rng + ?Sized>(
        space: &ConfigSpace,
        history: &History,
        losses: &BTreeMap<usize, f64>,
        region: &TrustRegionState,
        options: &SessionOptions,
        rng: &mut R,
    ) -> Option<GpModel> {
        let (configs, y): (Vec<Configuration>, Vec<f64>) = region
            .members
            .iter()
            .filter_map(|i| losses.get(i).map(|l| (history.records()[*i].config.clone(), *l)))
            .unzip();
        if configs.len() < 2 {
            return None;
        }
        let x = space.encode_all(&configs, Scheme::UnitOneHot);
        let template = KernelFamily::Mixed.build(&space.layout(Scheme::UnitOneHot));
        let search = HyperSearch {
            restarts: 1,
            evals_per_restart: options.hyper_evals_per_restart,
            seed: rng.gen(),
            ..Default::default()
        };
        let (kernel, noise) = fit_hypers(&x, &y, &template, 1e-3, &search).ok()?;
        GpModel::fit(x, &y, kernel, noise).ok()
    }

    /// Assigns the latest history record to its region and updates it.
    pub(super) fn observe(&mut self, space: &ConfigSpace, history: &History, seed: u64) {
        let index = history.len() - 1;
        let record = &history.records()[index];
        let key = record.config.key();
        let owner = if index < self.init_owner.len() {
            self.init_owner[index]
        } else if let Some(r) = self.pending.remove(&key) {
            r
        } else {
            self.nearest_region(space, &record.config)
        };
        let loss = history.sense().loss(record.value);
        let params = self.params;
        let region = &mut self.regions[owner];
        region.members.push(index);
        let Some(_) = region.center else {
            region.center = Some(record.config.clone());
            region.center_loss = loss;
            return;
        };
        let improved = loss < region.center_loss - params.improvement_margin * region.center_loss.abs();
        if loss < region.center_loss {
            region.center = Some(record.config.clone());
            region.center_loss = loss;
        }
        if region.record(improved, &params) == RegionEvent::Collapsed {
            region.reset(&params);
            let mut rng = ChaCha8Rng::seed_from_u64(
                seed ^ ((owner as u64 + 1) << 32) ^ (region.restarts as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15),
            );
            log::debug!("trust region {owner} restarts ({} so far)", region.restarts);
            self.queues[owner] = space.lhs_sample_with(self.restart_size, &mut rng);
        }
    }

    fn nearest_region(&self, space: &ConfigSpace, config: &Configuration) -> usize {
        let u = space.encode_all(core::slice::from_ref(config), Scheme::UnitOneHot).remove(0);
        let mut best = (f64::INFINITY, 0);
        for r in &self.regions {
            if let Some(c) = &r.center {
                let v = space.encode_all(core::slice::from_ref(c), Scheme::UnitOneHot).remove(0);
                let d: f64 = u.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum();
                if d < best.0 {
                    best = (d, r.region_id);
                }
            }
        }
        best.1
    }
}
