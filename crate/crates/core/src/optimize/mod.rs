//! Ask/tell tuning sessions.
//!
//! A [`TuningSession`] owns a space, an optimizer family, a budget and a
//! seeded random stream. Callers alternate [`TuningSession::suggest`] and
//! [`TuningSession::observe`]. Model-based families start with a Latin
//! hypercube design; the genetic algorithm seeds its first population from
//! one.
//!
//! Internally every optimizer minimizes a loss: the objective value for
//! [`Sense::Minimize`] and its negation for [`Sense::Maximize`].

mod ga;
mod turbo;

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use ga::{breed, crossover, mutate, GaParams};
pub use turbo::{RegionEvent, TrustRegionState, TurboParams};

use crate::acquisition::{expected_improvement, AcquisitionOptimizer};
use crate::math::sqrt;
use crate::space::{ConfigSpace, Configuration, Scheme};
use crate::surrogate::{fit_hypers, ForestModel, ForestParams, GpModel, HyperSearch, Kernel, KernelFamily, ParzenPair, Surrogate};
use crate::transfer::{rgpe_weights, workload_map, BaseTask, EnsembleModel};
use crate::{Error, Result};

/// Substituted value for failures before any success: `+1e18` when
/// minimizing, `-1e18` when maximizing.
pub const FAILURE_SENTINEL: f64 = 1e18;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Minimize,
    Maximize,
}

impl Sense {
    /// Whether `a` is strictly better than `b`.
    pub fn is_better(self, a: f64, b: f64) -> bool {
        match self {
            Sense::Minimize => a < b,
            Sense::Maximize => a > b,
        }
    }

    /// Objective value mapped to a loss (lower is better).
    pub fn loss(self, value: f64) -> f64 {
        match self {
            Sense::Minimize => value,
            Sense::Maximize => -value,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Sense::Minimize => "minimize",
            Sense::Maximize => "maximize",
        }
    }
}

impl FromStr for Sense {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "minimize" | "min" => Ok(Sense::Minimize),
            "maximize" | "max" => Ok(Sense::Maximize),
            _ => Err(Error::InvalidArgument(alloc::format!("unknown sense `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    Failed,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Failed => "failed",
        }
    }
}

impl FromStr for Status {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ok" | "" => Ok(Status::Ok),
            "failed" => Ok(Status::Failed),
            _ => Err(Error::InvalidArgument(alloc::format!("unknown status `{s}`"))),
        }
    }
}

/// One evaluated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub config: Configuration,
    /// Objective value; for failures, the value substituted at observe time.
    pub value: f64,
    pub status: Status,
    pub metrics: Option<Vec<f64>>,
    pub iteration: usize,
}

/// Append-only record of a session's observations.
#[derive(Debug, Clone, PartialEq)]
pub struct History {
    records: Vec<Observation>,
    sense: Sense,
}

impl History {
    pub fn new(sense: Sense) -> Self {
        History {
            records: Vec::new(),
            sense,
        }
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn records(&self) -> &[Observation] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Appends an observation, substituting the value of failed evaluations
    /// per [`handle_failure`]. Returns the stored value.
    pub fn push(&mut self, config: Configuration, value: f64, status: Status, metrics: Option<Vec<f64>>) -> f64 {
        let value = match status {
            Status::Failed => handle_failure(self, self.sense),
            Status::Ok => value,
        };
        let iteration = self.records.len();
        self.records.push(Observation {
            config,
            value,
            status,
            metrics,
            iteration,
        });
        value
    }

    /// Worst successful value seen so far.
    pub fn worst_success(&self) -> Option<f64> {
        let mut worst: Option<f64> = None;
        for r in self.records.iter().filter(|r| r.status == Status::Ok) {
            if worst.is_none_or(|w| self.sense.is_better(w, r.value)) {
                worst = Some(r.value);
            }
        }
        worst
    }

    /// `(index, loss)` pairs used to train models. Failed observations take the
    /// current worst successful value; they are skipped before any success.
    pub fn training_losses(&self) -> Vec<(usize, f64)> {
        let worst = self.worst_success();
        self.records
            .iter()
            .enumerate()
            .filter_map(|(i, r)| match r.status {
                Status::Ok => Some((i, self.sense.loss(r.value))),
                Status::Failed => worst.map(|w| (i, self.sense.loss(w))),
            })
            .collect()
    }

    /// Best value among successful observations up to each iteration.
    pub fn best_so_far_series(&self) -> Vec<Option<f64>> {
        let mut best: Option<f64> = None;
        self.records
            .iter()
            .map(|r| {
                if r.status == Status::Ok && best.is_none_or(|b| self.sense.is_better(r.value, b)) {
                    best = Some(r.value);
                }
                best
            })
            .collect()
    }

    /// Mean metrics vector over observations that carry one.
    pub fn metrics_profile(&self) -> Option<Vec<f64>> {
        let rows: Vec<&Vec<f64>> = self.records.iter().filter_map(|r| r.metrics.as_ref()).collect();
        let first = rows.first()?;
        let mut mean = alloc::vec![0.0; first.len()];
        for r in rows.iter().filter(|r| r.len() == first.len()) {
            mean.iter_mut().zip(r.iter()).for_each(|(m, v)| *m += v);
        }
        mean.iter_mut().for_each(|m| *m /= rows.len() as f64);
        Some(mean)
    }
}

/// Value recorded for a failed evaluation: the worst successful value seen
/// so far, or the sense-appropriate [`FAILURE_SENTINEL`] before any success.
pub fn handle_failure(history: &History, sense: Sense) -> f64 {
    let mut worst: Option<f64> = None;
    for r in history.records().iter().filter(|r| r.status == Status::Ok) {
        if worst.is_none_or(|w| sense.is_better(w, r.value)) {
            worst = Some(r.value);
        }
    }
    worst.unwrap_or(match sense {
        Sense::Minimize => FAILURE_SENTINEL,
        Sense::Maximize => -FAILURE_SENTINEL,
    })
}

/// Best successful observation; ties keep the earliest.
pub fn best_so_far(history: &History) -> Result<(&Configuration, f64)> {
    let mut best: Option<&Observation> = None;
    for r in history.records().iter().filter(|r| r.status == Status::Ok) {
        if best.is_none_or(|b| history.sense().is_better(r.value, b.value)) {
            best = Some(r);
        }
    }
    best.map(|r| (&r.config, r.value))
        .ok_or_else(|| Error::InsufficientData("no successful observations".into()))
}

/// Optimizer families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OptimizerKind {
    /// Uniform random search.
    Random,
    /// GP with an RBF kernel over the unit encoding (categoricals as scaled indices).
    VanillaBo,
    /// GP with an RBF kernel over the one-hot encoding.
    OneHotBo,
    /// GP with Matérn 5/2 on numeric columns times Hamming on one-hot columns.
    MixedBo,
    /// Random-forest surrogate with interleaved random configurations.
    Smac,
    /// Tree-structured Parzen estimator.
    Tpe,
    /// Trust-region BO with several local regions.
    Turbo,
    /// Genetic algorithm.
    Ga,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 8] = [
        OptimizerKind::Random,
        OptimizerKind::VanillaBo,
        OptimizerKind::OneHotBo,
        OptimizerKind::MixedBo,
        OptimizerKind::Smac,
        OptimizerKind::Tpe,
        OptimizerKind::Turbo,
        OptimizerKind::Ga,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::Random => "random",
            OptimizerKind::VanillaBo => "vanilla_bo",
            OptimizerKind::OneHotBo => "onehot_bo",
            OptimizerKind::MixedBo => "mixed_bo",
            OptimizerKind::Smac => "smac",
            OptimizerKind::Tpe => "tpe",
            OptimizerKind::Turbo => "turbo",
            OptimizerKind::Ga => "ga",
        }
    }

    fn gp_setup(self) -> Option<(KernelFamily, Scheme)> {
        match self {
            OptimizerKind::VanillaBo => Some((KernelFamily::Rbf, Scheme::Unit)),
            OptimizerKind::OneHotBo => Some((KernelFamily::Rbf, Scheme::UnitOneHot)),
            OptimizerKind::MixedBo => Some((KernelFamily::Mixed, Scheme::UnitOneHot)),
            _ => None,
        }
    }

    fn uses_init_design(self) -> bool {
        !matches!(self, OptimizerKind::Random | OptimizerKind::Ga)
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OptimizerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let kind = match s.to_ascii_lowercase().as_str() {
            "random" | "rs" => OptimizerKind::Random,
            "vanilla_bo" | "vbo" => OptimizerKind::VanillaBo,
            "onehot_bo" | "one_hot_bo" | "obo" => OptimizerKind::OneHotBo,
            "mixed_bo" | "mbo" => OptimizerKind::MixedBo,
            "smac" => OptimizerKind::Smac,
            "tpe" => OptimizerKind::Tpe,
            "turbo" => OptimizerKind::Turbo,
            "ga" => OptimizerKind::Ga,
            _ => return Err(Error::InvalidArgument(alloc::format!("unknown optimizer `{s}`"))),
        };
        Ok(kind)
    }
}

/// Knowledge transfer applied by a session.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Transfer {
    #[default]
    None,
    /// Ranking-weighted ensemble of base-task GPs and the target GP (GP families only).
    Rgpe { bases: Vec<BaseTask>, samples: usize },
    /// Merge the observations of the most similar source task into the
    /// training set (GP families and SMAC).
    Mapping { sources: Vec<BaseTask> },
}

/// Tunable constants of a session.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionOptions {
    pub n_init: usize,
    pub acquisition: AcquisitionOptimizer,
    /// Restarts of the first hyperparameter fit of a session.
    pub hyper_restarts: usize,
    /// Restarts of later fits, the first of which starts from the previous fit.
    pub hyper_restarts_warm: usize,
    pub hyper_evals_per_restart: usize,
    /// Hyperparameters are refit every iteration up to this many points,
    /// then every `refit_every` iterations.
    pub refit_all_until: usize,
    pub refit_every: usize,
    pub forest: ForestParams,
    pub gamma: f64,
    pub tpe_candidates: usize,
    pub turbo: TurboParams,
    pub ga: GaParams,
    pub transfer: Transfer,
}

impl Default for SessionOptions {
    fn default() -> Self {
        SessionOptions {
            n_init: 10,
            acquisition: AcquisitionOptimizer::default(),
            hyper_restarts: 5,
            hyper_restarts_warm: 1,
            hyper_evals_per_restart: 150,
            refit_all_until: 100,
            refit_every: 5,
            forest: ForestParams::default(),
            gamma: 0.25,
            tpe_candidates: 24,
            turbo: TurboParams::default(),
            ga: GaParams::default(),
            transfer: Transfer::None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct GpHypers {
    kernel: Kernel,
    noise: f64,
    fitted_at: usize,
}

#[derive(Debug, Clone)]
enum KindState {
    Stateless,
    Gp {
        hypers: Option<GpHypers>,
        bases: Vec<GpModel>,
    },
    Smac {
        model_turns: usize,
    },
    Turbo(turbo::TurboState),
    Ga(ga::GaState),
}

/// A single optimizer's ask/tell state.
#[derive(Debug, Clone)]
pub struct TuningSession {
    space: ConfigSpace,
    kind: OptimizerKind,
    sense: Sense,
    budget: usize,
    seed: u64,
    rng: ChaCha8Rng,
    options: SessionOptions,
    history: History,
    init_design: Vec<Configuration>,
    next_init: usize,
    state: KindState,
    last_weights: Option<Vec<f64>>,
}

impl TuningSession {
    pub fn new(space: ConfigSpace, kind: OptimizerKind, sense: Sense, budget: usize, seed: u64) -> Result<Self> {
        Self::with_options(space, kind, sense, budget, seed, SessionOptions::default())
    }

    pub fn with_options(
        space: ConfigSpace,
        kind: OptimizerKind,
        sense: Sense,
        budget: usize,
        seed: u64,
        options: SessionOptions,
    ) -> Result<Self> {
        if options.n_init == 0 {
            return Err(Error::InvalidArgument("n_init must be at least 1".into()));
        }
        if budget < options.n_init {
            return Err(Error::InvalidArgument(alloc::format!(
                "budget {budget} is smaller than the initial design of {}",
                options.n_init
            )));
        }
        if space.is_empty() {
            return Err(Error::InvalidArgument("empty configuration space".into()));
        }
        match (&options.transfer, kind.gp_setup().is_some(), kind) {
            (Transfer::None, _, _) => {}
            (Transfer::Rgpe { .. }, true, _) => {}
            (Transfer::Mapping { .. }, true, _) | (Transfer::Mapping { .. }, _, OptimizerKind::Smac) => {}
            _ => {
                return Err(Error::InvalidArgument(alloc::format!(
                    "transfer is not supported for {kind}"
                )))
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let init_design = if kind.uses_init_design() {
            space.lhs_sample(options.n_init, seed)
        } else {
            Vec::new()
        };
        let state = match kind {
            OptimizerKind::Random | OptimizerKind::Tpe => KindState::Stateless,
            OptimizerKind::VanillaBo | OptimizerKind::OneHotBo | OptimizerKind::MixedBo => KindState::Gp {
                hypers: None,
                bases: Self::fit_bases(&space, kind, sense, &options, &mut rng)?,
            },
            OptimizerKind::Smac => KindState::Smac { model_turns: 0 },
            OptimizerKind::Turbo => KindState::Turbo(turbo::TurboState::new(&options.turbo, options.n_init)),
            OptimizerKind::Ga => KindState::Ga(ga::GaState::new(space.lhs_sample(options.ga.population, seed))),
        };
        Ok(TuningSession {
            space,
            kind,
            sense,
            budget,
            seed,
            rng,
            options,
            history: History::new(sense),
            init_design,
            next_init: 0,
            state,
            last_weights: None,
        })
    }

    fn fit_bases(
        space: &ConfigSpace,
        kind: OptimizerKind,
        sense: Sense,
        options: &SessionOptions,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<GpModel>> {
        let Transfer::Rgpe { bases, .. } = &options.transfer else {
            return Ok(Vec::new());
        };
        let (family, scheme) = kind.gp_setup().expect("checked by caller");
        let mut models = Vec::with_capacity(bases.len());
        for task in bases {
            for c in &task.configs {
                space.validate(c)?;
            }
            let x = space.encode_all(&task.configs, scheme);
            let y: Vec<f64> = task.values.iter().map(|v| sense.loss(*v)).collect();
            let template = family.build(&space.layout(scheme));
            let (kernel, noise) = if x.len() >= 2 {
                let search = HyperSearch {
                    restarts: options.hyper_restarts,
                    evals_per_restart: options.hyper_evals_per_restart,
                    seed: rng.gen(),
                    ..Default::default()
                };
                fit_hypers(&x, &y, &template, 1e-3, &search)?
            } else {
                (template, 1e-3)
            };
            models.push(GpModel::fit(x, &y, kernel, noise)?);
        }
        Ok(models)
    }

    pub fn space(&self) -> &ConfigSpace {
        &self.space
    }

    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn history(&self) -> &History {
        &self.history
    }

    pub fn init_design(&self) -> &[Configuration] {
        &self.init_design
    }

    /// Ensemble weights used by the last RGPE suggestion (bases, then target).
    pub fn last_ensemble_weights(&self) -> Option<&[f64]> {
        self.last_weights.as_deref()
    }

    /// Trust regions of a TuRBO session.
    pub fn trust_regions(&self) -> Option<&[TrustRegionState]> {
        match &self.state {
            KindState::Turbo(t) => Some(t.regions()),
            _ => None,
        }
    }

    /// Index of the current generation of a GA session.
    pub fn ga_generation(&self) -> Option<usize> {
        match &self.state {
            KindState::Ga(g) => Some(g.generation()),
            _ => None,
        }
    }

    /// Proposes the next configuration to evaluate.
    pub fn suggest(&mut self) -> Result<Configuration> {
        if self.history.len() >= self.budget {
            return Err(Error::BudgetExhausted(self.budget));
        }
        if self.next_init < self.init_design.len() {
            let c = self.init_design[self.next_init].clone();
            self.next_init += 1;
            if let KindState::Turbo(t) = &mut self.state {
                t.assign_init(self.next_init - 1);
            }
            return Ok(c);
        }
        let suggestion = match self.kind {
            OptimizerKind::Random => self.space.random_config(&mut self.rng),
            OptimizerKind::VanillaBo | OptimizerKind::OneHotBo | OptimizerKind::MixedBo => self.gp_suggest(),
            OptimizerKind::Smac => self.smac_suggest(),
            OptimizerKind::Tpe => self.tpe_suggest(),
            OptimizerKind::Turbo => {
                let KindState::Turbo(state) = &mut self.state else { unreachable!() };
                state.suggest(&self.space, &self.history, &self.options, &mut self.rng)
            }
            OptimizerKind::Ga => {
                let KindState::Ga(state) = &mut self.state else { unreachable!() };
                state.suggest(&self.space, &self.options.ga, &mut self.rng)
            }
        };
        debug_assert!(self.space.validate(&suggestion).is_ok());
        Ok(suggestion)
    }

    /// Records an evaluation. Failed evaluations are stored with the value
    /// given by [`handle_failure`].
    pub fn observe(&mut self, config: Configuration, value: f64, status: Status) -> Result<()> {
        self.observe_with_metrics(config, value, status, None)
    }

    pub fn observe_with_metrics(
        &mut self,
        config: Configuration,
        value: f64,
        status: Status,
        metrics: Option<Vec<f64>>,
    ) -> Result<()> {
        self.space.validate(&config)?;
        let status = if status == Status::Ok && !value.is_finite() {
            Status::Failed
        } else {
            status
        };
        let stored = self.history.push(config.clone(), value, status, metrics);
        let loss = self.sense.loss(stored);
        match &mut self.state {
            KindState::Turbo(t) => t.observe(&self.space, &self.history, self.seed),
            KindState::Ga(g) => g.observe(config, loss, &self.space, &self.options.ga, &mut self.rng),
            _ => {}
        }
        Ok(())
    }

    /// Training set for model-based families: configurations and losses.
    fn training_data(&self) -> (Vec<Configuration>, Vec<f64>) {
        self.history
            .training_losses()
            .into_iter()
            .map(|(i, l)| (self.history.records()[i].config.clone(), l))
            .unzip()
    }

    /// Training data extended with the mapped source task's observations.
    fn training_data_with_mapping(&self) -> (Vec<Configuration>, Vec<f64>) {
        let (mut configs, mut losses) = self.training_data();
        if let Transfer::Mapping { sources } = &self.options.transfer {
            let profile = self.history.metrics_profile();
            let chosen = match profile {
                Some(p) => workload_map(&p, sources).ok(),
                None => sources.first(),
            };
            if let Some(task) = chosen {
                for (c, v) in task.configs.iter().zip(&task.values) {
                    if self.space.validate(c).is_ok() {
                        configs.push(c.clone());
                        losses.push(self.sense.loss(*v));
                    }
                }
            }
        }
        (configs, losses)
    }

    fn evaluated_keys(&self) -> BTreeSet<Vec<u64>> {
        self.history.records().iter().map(|r| r.config.key()).collect()
    }

    /// Up to `n` best observed configurations, best first.
    fn best_configs(&self, n: usize) -> Vec<Configuration> {
        let mut losses = self.history.training_losses();
        losses.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        losses
            .into_iter()
            .take(n)
            .map(|(i, _)| self.history.records()[i].config.clone())
            .collect()
    }

    fn maximize_ei<S: Surrogate + ?Sized>(&mut self, model: &S, scheme: Scheme, best_loss: f64) -> Configuration {
        let starts = self.best_configs(self.options.acquisition.n_starts);
        let exclude = self.evaluated_keys();
        let space = &self.space;
        let mut row = Vec::new();
        let score = |c: &Configuration| {
            row.clear();
            space.encode_into(c, scheme, &mut row);
            let (m, v) = model.predict(&row);
            expected_improvement(m, sqrt(v.max(0.0)), best_loss, Sense::Minimize)
        };
        self.options
            .acquisition
            .maximize(space, score, &starts, &exclude, &mut self.rng)
            .0
    }

    fn gp_suggest(&mut self) -> Configuration {
        let (family, scheme) = self.kind.gp_setup().expect("GP family");
        let (configs, losses) = self.training_data_with_mapping();
        if configs.len() < 2 {
            return self.space.random_config(&mut self.rng);
        }
        let x = self.space.encode_all(&configs, scheme);
        let n = x.len();
        let KindState::Gp { hypers, .. } = &self.state else { unreachable!() };
        let refit = match hypers {
            None => true,
            Some(h) => n <= self.options.refit_all_until || n >= h.fitted_at + self.options.refit_every,
        };
        let current = match hypers {
            Some(h) if !refit => Ok((h.kernel.clone(), h.noise)),
            _ => {
                let (template, noise0, restarts) = match hypers {
                    Some(h) => (h.kernel.clone(), h.noise, self.options.hyper_restarts_warm),
                    None => (family.build(&self.space.layout(scheme)), 1e-3, self.options.hyper_restarts),
                };
                let search = HyperSearch {
                    restarts,
                    evals_per_restart: self.options.hyper_evals_per_restart,
                    seed: self.rng.gen(),
                    ..Default::default()
                };
                fit_hypers(&x, &losses, &template, noise0, &search)
            }
        };
        let (kernel, noise) = match current {
            Ok(v) => v,
            Err(e) => {
                log::warn!("hyperparameter fit failed ({e}); suggesting at random");
                return self.space.random_config(&mut self.rng);
            }
        };
        if refit {
            if let KindState::Gp { hypers, .. } = &mut self.state {
                *hypers = Some(GpHypers {
                    kernel: kernel.clone(),
                    noise,
                    fitted_at: n,
                });
            }
        }
        let model = match GpModel::fit(x.clone(), &losses, kernel, noise) {
            Ok(m) => m,
            Err(e) => {
                log::warn!("GP fit failed ({e}); suggesting at random");
                return self.space.random_config(&mut self.rng);
            }
        };
        let best = losses.iter().copied().fold(f64::INFINITY, f64::min);

        let bases = match &self.state {
            KindState::Gp { bases, .. } if !bases.is_empty() => bases.clone(),
            _ => Vec::new(),
        };
        if bases.is_empty() || n < 3 {
            return self.maximize_ei(&model, scheme, best);
        }
        let samples = match &self.options.transfer {
            Transfer::Rgpe { samples, .. } => (*samples).max(1),
            _ => 100,
        };
        let base_refs: Vec<&dyn Surrogate> = bases.iter().map(|b| b as &dyn Surrogate).collect();
        let weight_seed = self.rng.gen();
        let weights = match rgpe_weights(&base_refs, &x, &losses, &model, samples, weight_seed) {
            Ok(w) => w,
            Err(e) => {
                log::warn!("ensemble weights failed ({e}); using the target model alone");
                return self.maximize_ei(&model, scheme, best);
            }
        };
        self.last_weights = Some(weights.clone());
        let mut components = base_refs;
        components.push(&model);
        let ensemble = EnsembleModel::new(components, weights).expect("weights are normalized");
        self.maximize_ei(&ensemble, scheme, best)
    }

    fn smac_suggest(&mut self) -> Configuration {
        let KindState::Smac { model_turns } = &mut self.state else { unreachable!() };
        let turn = *model_turns;
        *model_turns += 1;
        if turn % 2 == 1 {
            return self.space.random_config(&mut self.rng);
        }
        let (configs, losses) = self.training_data_with_mapping();
        if configs.len() < 2 {
            return self.space.random_config(&mut self.rng);
        }
        let x = self.space.encode_all(&configs, Scheme::Raw);
        let categorical: Vec<bool> = self.space.knobs().iter().map(|k| k.is_categorical()).collect();
        let seed = self.rng.gen();
        let forest = match ForestModel::fit(&x, &losses, &categorical, &self.options.forest, seed) {
            Ok(f) => f,
            Err(_) => return self.space.random_config(&mut self.rng),
        };
        let best = losses.iter().copied().fold(f64::INFINITY, f64::min);
        self.maximize_ei(&forest, Scheme::Raw, best)
    }

    fn tpe_suggest(&mut self) -> Configuration {
        let (configs, losses) = self.training_data();
        let pair = match ParzenPair::fit(&self.space, &configs, &losses, self.options.gamma) {
            Ok(p) => p,
            Err(_) => return self.space.random_config(&mut self.rng),
        };
        let exclude = self.evaluated_keys();
        let mut best: Option<(Configuration, f64)> = None;
        let mut fallback: Option<(Configuration, f64)> = None;
        for _ in 0..self.options.tpe_candidates.max(1) {
            let c = pair.sample_good(&self.space, &mut self.rng);
            let s = pair.score(&self.space, &c);
            let slot = if exclude.contains(&c.key()) { &mut fallback } else { &mut best };
            if slot.as_ref().is_none_or(|(_, b)| s > *b) {
                *slot = Some((c, s));
            }
        }
        best.or(fallback).map(|(c, _)| c).expect("at least one candidate")
    }
}

/// Runs `session` to its budget against `objective`, which returns the value
/// and status of each evaluation.
pub fn run_session<F>(session: &mut TuningSession, mut objective: F) -> Result<()>
where
    F: FnMut(&Configuration) -> (f64, Status),
{
    while session.history().len() < session.budget() {
        let c = session.suggest()?;
        let (v, s) = objective(&c);
        session.observe(c, v, s)?;
    }
    Ok(())
}

/// Name of the optimizer state, for diagnostics.
pub fn describe(session: &TuningSession) -> String {
    alloc::format!(
        "{} on `{}` ({} of {} evaluations)",
        session.kind(),
        session.space().name(),
        session.history().len(),
        session.budget()
    )
}
