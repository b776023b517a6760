//! Knob-importance measurements and knob-selection helpers.
//!
//! Variance-based measurements (`gini`, `lasso`, `fanova`) describe a knob's
//! global effect. Tunability-based ones (`ablation`, `shap`) measure the gain
//! reachable by moving a knob away from its default. Forest-based methods fit
//! a [`ForestModel`] on the raw encoding, so forest column `j` is knob `j`.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::math::{ceil, floor, mean_var, pow, sqrt};
use crate::optimize::Sense;
use crate::space::{ConfigSpace, Configuration, KnobKind, Scheme};
use crate::surrogate::{ForestModel, ForestParams, Node, Tree};
use crate::{Error, Result};

/// Exact Shapley enumeration is used up to this many players.
pub const SHAP_EXACT_LIMIT: usize = 12;
/// Permutations drawn per observation in sampling mode.
pub const SHAP_PERMUTATIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Gini,
    Lasso,
    Fanova,
    Ablation,
    Shap,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Gini, Method::Lasso, Method::Fanova, Method::Ablation, Method::Shap];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Gini => "gini",
            Method::Lasso => "lasso",
            Method::Fanova => "fanova",
            Method::Ablation => "ablation",
            Method::Shap => "shap",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(alloc::format!("unknown importance method `{s}`")))
    }
}

/// Observations plus the default configuration and its performance.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    pub space: ConfigSpace,
    pub configs: Vec<Configuration>,
    pub y: Vec<f64>,
    pub default_config: Configuration,
    pub default_value: f64,
    pub sense: Sense,
}

impl TrainingSet {
    pub fn new(
        space: ConfigSpace,
        configs: Vec<Configuration>,
        y: Vec<f64>,
        default_config: Configuration,
        default_value: f64,
        sense: Sense,
    ) -> Result<Self> {
        if configs.len() != y.len() {
            return Err(Error::InvalidArgument("configs and y lengths differ".into()));
        }
        if configs.len() < 2 {
            return Err(Error::InsufficientData("importance needs at least two observations".into()));
        }
        if !default_value.is_finite() || y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("performance values must be finite".into()));
        }
        for c in configs.iter().chain(core::iter::once(&default_config)) {
            space.validate(c)?;
        }
        Ok(TrainingSet {
            space,
            configs,
            y,
            default_config,
            default_value,
            sense,
        })
    }

    fn raw(&self) -> Vec<Vec<f64>> {
        self.space.encode_all(&self.configs, Scheme::Raw)
    }

    fn categorical_mask(&self) -> Vec<bool> {
        self.space.knobs().iter().map(|k| k.is_categorical()).collect()
    }

    fn forest(&self, seed: u64) -> Result<ForestModel> {
        ForestModel::fit(&self.raw(), &self.y, &self.categorical_mask(), &ForestParams::default(), seed)
    }

    fn is_constant(&self) -> bool {
        self.y.iter().all(|v| *v == self.y[0])
    }
}

/// Per-knob scores of one measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub method: Method,
    pub scores: BTreeMap<String, f64>,
    /// Knob names by descending score; ties by name.
    pub ranking: Vec<String>,
}

impl ImportanceReport {
    /// Builds a report from scores listed in space order.
    pub fn from_scores(method: Method, space: &ConfigSpace, scores: &[f64]) -> Self {
        let mut named: Vec<(String, f64)> = space
            .knobs()
            .iter()
            .zip(scores)
            .map(|(k, s)| (k.name().to_string(), *s))
            .collect();
        named.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        ImportanceReport {
            method,
            ranking: named.iter().map(|(n, _)| n.clone()).collect(),
            scores: named.into_iter().collect(),
        }
    }

    fn uniform(method: Method, space: &ConfigSpace) -> Self {
        let m = space.len() as f64;
        Self::from_scores(method, space, &vec![1.0 / m; space.len()])
    }
}

/// Runs the named measurement.
pub fn measure(method: Method, data: &TrainingSet, seed: u64) -> Result<ImportanceReport> {
    match method {
        Method::Gini => gini_importance(data, seed),
        Method::Lasso => lasso_importance(data, &LassoPath::default()),
        Method::Fanova => fanova_importance(data, seed),
        Method::Ablation => ablation_importance(data, seed),
        Method::Shap => shap_importance(data, seed),
    }
}

/// Split counts per knob across all trees, normalized to sum 1. Constant
/// targets give uniform scores.
pub fn gini_importance(data: &TrainingSet, seed: u64) -> Result<ImportanceReport> {
    if data.is_constant() {
        return Ok(ImportanceReport::uniform(Method::Gini, &data.space));
    }
    let counts = data.forest(seed)?.split_counts();
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Ok(ImportanceReport::uniform(Method::Gini, &data.space));
    }
    let scores: Vec<f64> = counts.iter().map(|c| *c as f64 / total as f64).collect();
    Ok(ImportanceReport::from_scores(Method::Gini, &data.space, &scores))
}

/// Geometric regularization path from the smallest penalty that keeps every
/// coefficient at zero down to `min_ratio` times it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LassoPath {
    pub steps: usize,
    pub min_ratio: f64,
    pub tolerance: f64,
    pub max_sweeps: usize,
}

impl Default for LassoPath {
    fn default() -> Self {
        LassoPath {
            steps: 100,
            min_ratio: 1e-3,
            tolerance: 1e-7,
            max_sweeps: 1000,
        }
    }
}

/// Degree-2 feature expansion over the unit/one-hot encoding.
struct Design {
    /// Column-major standardized features.
    columns: Vec<Vec<f64>>,
    /// Knobs each feature depends on.
    owners: Vec<(usize, usize)>,
}

fn polynomial_design(space: &ConfigSpace, configs: &[Configuration]) -> Design {
    let layout = space.layout(Scheme::UnitOneHot);
    let owner = layout.column_owners();
    let numeric: BTreeSet<usize> = layout.numeric_columns().into_iter().collect();
    let rows = space.encode_all(configs, Scheme::UnitOneHot);
    let d = layout.width();
    let col = |c: usize| -> Vec<f64> { rows.iter().map(|r| r[c]).collect() };
    let mut raw: Vec<(Vec<f64>, (usize, usize))> = Vec::new();
    for c in 0..d {
        raw.push((col(c), (owner[c], owner[c])));
    }
    for c in 0..d {
        if numeric.contains(&c) {
            raw.push((rows.iter().map(|r| r[c] * r[c]).collect(), (owner[c], owner[c])));
        }
    }
    for a in 0..d {
        for b in a + 1..d {
            if owner[a] != owner[b] {
                raw.push((rows.iter().map(|r| r[a] * r[b]).collect(), (owner[a], owner[b])));
            }
        }
    }
    let mut columns = Vec::new();
    let mut owners = Vec::new();
    for (mut v, o) in raw {
        let (mean, var) = mean_var(&v);
        if var <= 1e-24 {
            continue;
        }
        let sd = sqrt(var);
        v.iter_mut().for_each(|x| *x = (*x - mean) / sd);
        columns.push(v);
        owners.push(o);
    }
    Design { columns, owners }
}

fn soft_threshold(z: f64, lambda: f64) -> f64 {
    if z > lambda {
        z - lambda
    } else if z < -lambda {
        z + lambda
    } else {
        0.0
    }
}

/// Coordinate descent for `(1/2n)|y - X b|^2 + lambda |b|_1` on standardized
/// columns, warm-started from `beta`. `r` holds the residual `y - X b`.
fn lasso_solve(design: &Design, r: &mut [f64], beta: &mut [f64], lambda: f64, path: &LassoPath) {
    let n = r.len() as f64;
    let update = |j: usize, r: &mut [f64], beta: &mut [f64]| -> f64 {
        let x = &design.columns[j];
        let rho = x.iter().zip(r.iter()).map(|(a, b)| a * b).sum::<f64>() / n + beta[j];
        let new = soft_threshold(rho, lambda);
        let delta = new - beta[j];
        if delta != 0.0 {
            r.iter_mut().zip(x).for_each(|(ri, xi)| *ri -= xi * delta);
            beta[j] = new;
        }
        delta.abs()
    };
    for _ in 0..path.max_sweeps {
        // full sweep, then iterate on the active set until it settles
        let mut max_delta = 0.0f64;
        for j in 0..beta.len() {
            max_delta = max_delta.max(update(j, r, beta));
        }
        if max_delta < path.tolerance {
            return;
        }
        let active: Vec<usize> = (0..beta.len()).filter(|&j| beta[j] != 0.0).collect();
        for _ in 0..path.max_sweeps {
            let mut d = 0.0f64;
            for &j in &active {
                d = d.max(update(j, r, beta));
            }
            if d < path.tolerance {
                break;
            }
        }
    }
}

/// Lasso over degree-2 polynomial features. A knob scores by the path step at
/// which any of its features first becomes nonzero: activation at step `i`
/// of `L` scores about `(L - i) / L`, with ties within a step broken by
/// coefficient magnitude. Knobs never activated score 0.
pub fn lasso_importance(data: &TrainingSet, path: &LassoPath) -> Result<ImportanceReport> {
    if path.steps == 0 || !(path.min_ratio > 0.0 && path.min_ratio < 1.0) {
        return Err(Error::InvalidArgument("invalid lasso path".into()));
    }
    let design = polynomial_design(&data.space, &data.configs);
    let (y_mean, y_var) = mean_var(&data.y);
    if design.columns.is_empty() || y_var <= 0.0 {
        return Ok(ImportanceReport::uniform(Method::Lasso, &data.space));
    }
    let n = data.y.len() as f64;
    let mut r: Vec<f64> = data.y.iter().map(|v| v - y_mean).collect();
    let lambda_max = design
        .columns
        .iter()
        .map(|x| (x.iter().zip(&r).map(|(a, b)| a * b).sum::<f64>() / n).abs())
        .fold(0.0, f64::max);
    let m = data.space.len();
    let steps = path.steps;
    let mut activated: Vec<Option<(usize, f64)>> = vec![None; m];
    let mut beta = vec![0.0; design.columns.len()];
    for step in 0..steps {
        let frac = if steps == 1 { 1.0 } else { step as f64 / (steps - 1) as f64 };
        let lambda = lambda_max * pow(path.min_ratio, frac);
        lasso_solve(&design, &mut r, &mut beta, lambda, path);
        let mut magnitude = vec![0.0; m];
        for (j, b) in beta.iter().enumerate() {
            let (a, c) = design.owners[j];
            magnitude[a] += b.abs();
            if c != a {
                magnitude[c] += b.abs();
            }
        }
        for k in 0..m {
            if activated[k].is_none() && magnitude[k] > 0.0 {
                activated[k] = Some((step, magnitude[k]));
            }
        }
    }
    let band = 1.0 / steps as f64;
    let scores: Vec<f64> = activated
        .iter()
        .map(|a| match a {
            Some((step, mag)) => (steps - step) as f64 * band + 0.5 * band * mag / (1.0 + mag),
            None => 0.0,
        })
        .collect();
    Ok(ImportanceReport::from_scores(Method::Lasso, &data.space, &scores))
}

/// Region of a leaf along one raw column.
#[derive(Debug, Clone, PartialEq)]
enum Extent {
    /// Half-open interval `(lo, hi]`.
    Interval(f64, f64),
    /// Allowed category indices.
    Set(Vec<bool>),
}

/// Fraction of a knob's domain covered by an extent, under the uniform
/// measure (integers and categories count values).
fn measure_of(kind: &KnobKind, e: &Extent) -> f64 {
    match (kind, e) {
        (KnobKind::Continuous { lower, upper }, Extent::Interval(lo, hi)) => {
            let a = lo.max(*lower);
            let b = hi.min(*upper);
            ((b - a) / (upper - lower)).max(0.0)
        }
        (KnobKind::Integer { lower, upper }, Extent::Interval(lo, hi)) => {
            let (l, u) = (*lower as f64, *upper as f64);
            let top = floor(hi.min(u));
            let bottom = floor(*lo).max(l - 1.0);
            ((top - bottom) / (u - l + 1.0)).max(0.0)
        }
        (KnobKind::Categorical { categories }, Extent::Set(s)) => {
            s.iter().filter(|b| **b).count() as f64 / categories.len() as f64
        }
        _ => 0.0,
    }
}

fn full_extent(kind: &KnobKind) -> Extent {
    match kind {
        KnobKind::Categorical { categories } => Extent::Set(vec![true; categories.len()]),
        _ => Extent::Interval(f64::NEG_INFINITY, f64::INFINITY),
    }
}

fn leaf_regions(tree: &Tree, space: &ConfigSpace) -> Vec<(f64, Vec<Extent>)> {
    let mut out = Vec::new();
    let root: Vec<Extent> = space.knobs().iter().map(|k| full_extent(k.kind())).collect();
    let mut stack = vec![(0usize, root)];
    while let Some((i, region)) = stack.pop() {
        match &tree.nodes[i] {
            Node::Leaf { value } => out.push((*value, region)),
            Node::Numeric {
                column,
                threshold,
                left,
                right,
            } => {
                let Extent::Interval(lo, hi) = region[*column] else { unreachable!() };
                let mut l = region.clone();
                l[*column] = Extent::Interval(lo, hi.min(*threshold));
                let mut r = region;
                r[*column] = Extent::Interval(lo.max(*threshold), hi);
                stack.push((*right, r));
                stack.push((*left, l));
            }
            Node::Categorical {
                column,
                categories,
                left,
                right,
            } => {
                let Extent::Set(s) = &region[*column] else { unreachable!() };
                let mut ls = s.clone();
                let mut rs = s.clone();
                for (c, (lb, rb)) in ls.iter_mut().zip(rs.iter_mut()).enumerate() {
                    let goes_left = categories.binary_search(&c).is_ok();
                    *lb &= goes_left;
                    *rb &= !goes_left;
                }
                let mut l = region.clone();
                l[*column] = Extent::Set(ls);
                let mut r = region;
                r[*column] = Extent::Set(rs);
                stack.push((*right, r));
                stack.push((*left, l));
            }
        }
    }
    out
}

/// First-order variance fractions of one tree, or `None` when the tree is
/// constant over the domain.
pub(crate) fn tree_first_order(tree: &Tree, space: &ConfigSpace) -> Option<Vec<f64>> {
    let leaves = leaf_regions(tree, space);
    let kinds: Vec<&KnobKind> = space.knobs().iter().map(|k| k.kind()).collect();
    let m = kinds.len();
    let measures: Vec<Vec<f64>> = leaves
        .iter()
        .map(|(_, ext)| ext.iter().zip(&kinds).map(|(e, k)| measure_of(k, e)).collect())
        .collect();
    // product of measures excluding each dimension, via prefix/suffix products
    let others: Vec<Vec<f64>> = measures
        .iter()
        .map(|ms| {
            let mut prefix = vec![1.0; m + 1];
            for d in 0..m {
                prefix[d + 1] = prefix[d] * ms[d];
            }
            let mut out = vec![0.0; m];
            let mut suffix = 1.0;
            for d in (0..m).rev() {
                out[d] = prefix[d] * suffix;
                suffix *= ms[d];
            }
            out
        })
        .collect();
    let volume: Vec<f64> = measures.iter().map(|ms| ms.iter().product()).collect();
    let f0: f64 = leaves.iter().zip(&volume).map(|((v, _), w)| v * w).sum();
    let total: f64 = leaves.iter().zip(&volume).map(|((v, _), w)| w * (v - f0) * (v - f0)).sum();
    if !(total > 1e-300) {
        return None;
    }
    let mut fractions = vec![0.0; m];
    for d in 0..m {
        let cells: Vec<Extent> = match kinds[d] {
            KnobKind::Categorical { categories } => (0..categories.len())
                .map(|c| {
                    let mut s = vec![false; categories.len()];
                    s[c] = true;
                    Extent::Set(s)
                })
                .collect(),
            _ => {
                let mut cuts: Vec<f64> = leaves
                    .iter()
                    .filter_map(|(_, ext)| match ext[d] {
                        Extent::Interval(lo, _) if lo.is_finite() => Some(lo),
                        _ => None,
                    })
                    .collect();
                cuts.sort_by(f64::total_cmp);
                cuts.dedup();
                let mut bounds = vec![f64::NEG_INFINITY];
                bounds.extend(cuts);
                bounds.push(f64::INFINITY);
                bounds.windows(2).map(|w| Extent::Interval(w[0], w[1])).collect()
            }
        };
        let mut v_d = 0.0;
        for cell in &cells {
            let w = measure_of(kinds[d], cell);
            if w <= 0.0 {
                continue;
            }
            let mut marginal = 0.0;
            for (li, (value, ext)) in leaves.iter().enumerate() {
                let inside = match (&ext[d], cell) {
                    (Extent::Interval(lo, hi), Extent::Interval(a, b)) => lo <= a && b <= hi,
                    (Extent::Set(s), Extent::Set(c)) => s.iter().zip(c).any(|(x, y)| *x && *y),
                    _ => false,
                };
                if inside {
                    marginal += value * others[li][d];
                }
            }
            v_d += w * (marginal - f0) * (marginal - f0);
        }
        fractions[d] = (v_d / total).clamp(0.0, 1.0);
    }
    Some(fractions)
}

/// First-order fANOVA variance fractions of a forest fit, averaged over
/// trees. Constant data gives uniform scores.
pub fn fanova_importance(data: &TrainingSet, seed: u64) -> Result<ImportanceReport> {
    if data.is_constant() {
        return Ok(ImportanceReport::uniform(Method::Fanova, &data.space));
    }
    let forest = data.forest(seed)?;
    Ok(fanova_of_forest(&forest, &data.space))
}

/// First-order fractions of an already fitted forest over `space`'s raw encoding.
pub fn fanova_of_forest(forest: &ForestModel, space: &ConfigSpace) -> ImportanceReport {
    let m = space.len();
    let mut sum = vec![0.0; m];
    let mut counted = 0usize;
    for t in &forest.trees {
        if let Some(f) = tree_first_order(t, space) {
            sum.iter_mut().zip(&f).for_each(|(s, x)| *s += x);
            counted += 1;
        }
    }
    if counted == 0 {
        return ImportanceReport::uniform(Method::Fanova, space);
    }
    sum.iter_mut().for_each(|s| *s /= counted as f64);
    ImportanceReport::from_scores(Method::Fanova, space, &sum)
}

/// Greedy ablation path from `default` to `target` under `predict` (a loss,
/// lower is better): each step applies the remaining single-knob change with
/// the lowest predicted loss; ties go to the lower knob index.
pub fn ablation_path<F>(default: &Configuration, target: &Configuration, mut predict: F) -> Vec<usize>
where
    F: FnMut(&Configuration) -> f64,
{
    let mut remaining: Vec<usize> = (0..default.len())
        .filter(|&i| default.values()[i] != target.values()[i])
        .collect();
    let mut current = default.clone();
    let mut path = Vec::with_capacity(remaining.len());
    while !remaining.is_empty() {
        let mut best: Option<(usize, f64)> = None;
        for (pos, &k) in remaining.iter().enumerate() {
            let mut trial = current.clone();
            trial.values_mut()[k] = target.values()[k];
            let loss = predict(&trial);
            if best.is_none_or(|(_, b)| loss < b) {
                best = Some((pos, loss));
            }
        }
        let (pos, _) = best.expect("non-empty");
        let k = remaining.remove(pos);
        current.values_mut()[k] = target.values()[k];
        path.push(k);
    }
    path
}

/// Mean inverse ablation-path rank over all better-than-default targets.
/// Knobs absent from a path take rank `m`.
pub fn ablation_importance(data: &TrainingSet, seed: u64) -> Result<ImportanceReport> {
    let sense = data.sense;
    let targets: Vec<&Configuration> = data
        .configs
        .iter()
        .zip(&data.y)
        .filter(|(_, v)| sense.is_better(**v, data.default_value))
        .map(|(c, _)| c)
        .collect();
    if targets.is_empty() {
        return Err(Error::InsufficientData("no configuration beats the default".into()));
    }
    let forest = data.forest(seed)?;
    let m = data.space.len();
    let mut sum = vec![0.0; m];
    let mut row = Vec::with_capacity(m);
    for target in &targets {
        let path = ablation_path(&data.default_config, target, |c| {
            row.clear();
            data.space.encode_into(c, Scheme::Raw, &mut row);
            sense.loss(forest.mean(&row))
        });
        let mut rank = vec![m; m];
        for (r, k) in path.iter().enumerate() {
            rank[*k] = r + 1;
        }
        sum.iter_mut().zip(&rank).for_each(|(s, r)| *s += 1.0 / *r as f64);
    }
    let scores: Vec<f64> = sum.iter().map(|s| s / targets.len() as f64).collect();
    Ok(ImportanceReport::from_scores(Method::Ablation, &data.space, &scores))
}

/// Shapley values of `value(theta with baseline values outside S)` for each
/// knob, with the baseline configuration as the empty coalition.
///
/// Knobs where `theta` equals `baseline` get 0. The game over the remaining
/// `k` knobs is enumerated exactly when `k <= exact_limit`, otherwise
/// estimated from `permutations` random orderings.
pub fn shapley_values<F>(
    theta: &Configuration,
    baseline: &Configuration,
    mut value: F,
    exact_limit: usize,
    permutations: usize,
    seed: u64,
) -> Vec<f64>
where
    F: FnMut(&Configuration) -> f64,
{
    let m = theta.len();
    let players: Vec<usize> = (0..m).filter(|&i| theta.values()[i] != baseline.values()[i]).collect();
    let k = players.len();
    let mut phi = vec![0.0; m];
    if k == 0 {
        return phi;
    }
    let compose = |mask: u64| {
        let mut c = baseline.clone();
        for (bit, &p) in players.iter().enumerate() {
            if mask >> bit & 1 == 1 {
                c.values_mut()[p] = theta.values()[p];
            }
        }
        c
    };
    if k <= exact_limit && k < 63 {
        let subsets = 1u64 << k;
        let values: Vec<f64> = (0..subsets).map(|mask| value(&compose(mask))).collect();
        // weight |S|! (k - |S| - 1)! / k! for coalitions S not containing the player
        let mut fact = vec![1.0f64; k + 1];
        for i in 1..=k {
            fact[i] = fact[i - 1] * i as f64;
        }
        let weight: Vec<f64> = (0..k).map(|s| fact[s] * fact[k - s - 1] / fact[k]).collect();
        for (bit, &p) in players.iter().enumerate() {
            let mut total = 0.0;
            for mask in 0..subsets {
                if mask >> bit & 1 == 0 {
                    let s = mask.count_ones() as usize;
                    total += weight[s] * (values[(mask | 1 << bit) as usize] - values[mask as usize]);
                }
            }
            phi[p] = total;
        }
        return phi;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..k).collect();
    let rounds = permutations.max(1);
    for _ in 0..rounds {
        order.shuffle(&mut rng);
        let mut current = baseline.clone();
        let mut prev = value(&current);
        for &bit in &order {
            let p = players[bit];
            current.values_mut()[p] = theta.values()[p];
            let next = value(&current);
            phi[p] += next - prev;
            prev = next;
        }
    }
    phi.iter_mut().for_each(|v| *v /= rounds as f64);
    phi
}

/// Mean positive Shapley value per knob over all observations, relative to
/// the default configuration. Values are oriented so that positive means
/// better (negated when minimizing).
pub fn shap_importance(data: &TrainingSet, seed: u64) -> Result<ImportanceReport> {
    let forest = data.forest(seed)?;
    let m = data.space.len();
    let sign = match data.sense {
        Sense::Maximize => 1.0,
        Sense::Minimize => -1.0,
    };
    let exact_limit = if m <= SHAP_EXACT_LIMIT { m } else { SHAP_EXACT_LIMIT };
    let mut sum = vec![0.0; m];
    let mut row = Vec::with_capacity(m);
    for (i, theta) in data.configs.iter().enumerate() {
        let phi = shapley_values(
            theta,
            &data.default_config,
            |c| {
                row.clear();
                data.space.encode_into(c, Scheme::Raw, &mut row);
                forest.mean(&row)
            },
            exact_limit,
            SHAP_PERMUTATIONS,
            seed ^ (i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15),
        );
        sum.iter_mut().zip(&phi).for_each(|(s, p)| *s += (sign * p).max(0.0));
    }
    let scores: Vec<f64> = sum.iter().map(|s| s / data.configs.len() as f64).collect();
    Ok(ImportanceReport::from_scores(Method::Shap, &data.space, &scores))
}

/// The first `k` knobs of the ranking.
pub fn topk(report: &ImportanceReport, k: usize) -> Result<Vec<String>> {
    if k == 0 || k > report.ranking.len() {
        return Err(Error::InvalidArgument(alloc::format!(
            "k must lie in 1..={}, got {k}",
            report.ranking.len()
        )));
    }
    Ok(report.ranking[..k].to_vec())
}

/// Intersection over union of two knob sets; two empty sets give 1.
pub fn iou_topk<S: AsRef<str>>(a: &[S], b: &[S]) -> f64 {
    let a: BTreeSet<&str> = a.iter().map(AsRef::as_ref).collect();
    let b: BTreeSet<&str> = b.iter().map(AsRef::as_ref).collect();
    let union = a.union(&b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(&b).count() as f64 / union as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schedule {
    /// Start with 4 knobs and add 2 every 4 iterations.
    Increase,
    /// Keep 60% of the knobs every 20 iterations.
    Decrease,
}

impl FromStr for Schedule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "increase" => Ok(Schedule::Increase),
            "decrease" => Ok(Schedule::Decrease),
            _ => Err(Error::InvalidArgument(alloc::format!("unknown schedule `{s}`"))),
        }
    }
}

/// Number of active knobs at `iteration`, between 1 and `total_knobs`.
pub fn incremental_schedule(kind: Schedule, total_knobs: usize, iteration: usize) -> usize {
    let n = match kind {
        Schedule::Increase => 4 + 2 * (iteration / 4),
        Schedule::Decrease => {
            let x = total_knobs as f64 * pow(0.6, (iteration / 20) as f64);
            // guard against 0.6^k landing a hair above an integer
            ceil(x - 1e-9) as usize
        }
    };
    n.min(total_knobs).max(1)
}
