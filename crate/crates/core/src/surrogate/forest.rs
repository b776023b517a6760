use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Surrogate;
use crate::math::{ceil, mean_var};
use crate::{Error, Result};

/// Hyperparameters of [`ForestModel`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub bootstrap: bool,
    /// Fraction of columns considered at each split (rounded up, at least one).
    pub feature_fraction: f64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_depth: None,
            min_samples_leaf: 1,
            bootstrap: true,
            feature_fraction: 5.0 / 6.0,
        }
    }
}

/// A tree node. Children are indices into the owning tree's node array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        value: f64,
    },
    /// `x[column] <= threshold` goes left.
    Numeric {
        column: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    /// Category indices in `categories` go left.
    Categorical {
        column: usize,
        categories: Vec<usize>,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return *value,
                Node::Numeric {
                    column,
                    threshold,
                    left,
                    right,
                } => i = if x[*column] <= *threshold { *left } else { *right },
                Node::Categorical {
                    column,
                    categories,
                    left,
                    right,
                } => {
                    let c = x[*column];
                    let goes_left = c >= 0.0 && categories.binary_search(&(c as usize)).is_ok();
                    i = if goes_left { *left } else { *right };
                }
            }
        }
    }

    /// Column used by the root split, `None` for a single leaf.
    pub fn root_column(&self) -> Option<usize> {
        match &self.nodes[0] {
            Node::Leaf { .. } => None,
            Node::Numeric { column, .. } | Node::Categorical { column, .. } => Some(*column),
        }
    }
}

/// Random forest regressor over raw-encoded configurations.
///
/// Predictions are the mean of the per-tree outputs; the variance is their
/// population variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub params: ForestParams,
    /// Whether each input column is categorical (raw category index).
    pub categorical: Vec<bool>,
    pub trees: Vec<Tree>,
}

impl ForestModel {
    /// Grows `params.n_trees` trees with variance-reduction splits.
    pub fn fit(
        x: &[Vec<f64>],
        y: &[f64],
        categorical: &[bool],
        params: &ForestParams,
        seed: u64,
    ) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::InvalidArgument("x and y lengths differ".into()));
        }
        if x.is_empty() {
            return Err(Error::InsufficientData("forest needs at least one point".into()));
        }
        if x.iter().any(|r| r.len() != categorical.len()) {
            return Err(Error::LayoutMismatch("row width differs from column kinds".into()));
        }
        if params.n_trees == 0 {
            return Err(Error::InvalidArgument("n_trees must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = x.len();
        let d = categorical.len();
        let m_try = (ceil(params.feature_fraction * d as f64) as usize).clamp(1, d.max(1));
        let builder = TreeBuilder {
            x,
            y,
            categorical,
            min_leaf: params.min_samples_leaf.max(1),
            max_depth: params.max_depth.unwrap_or(usize::MAX),
            m_try,
        };
        let trees = (0..params.n_trees)
            .map(|_| {
                let idx: Vec<usize> = if params.bootstrap {
                    (0..n).map(|_| rng.gen_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                builder.build(idx, &mut rng)
            })
            .collect();
        Ok(ForestModel {
            params: *params,
            categorical: categorical.to_vec(),
            trees,
        })
    }

    pub fn tree_predictions(&self, x: &[f64]) -> Vec<f64> {
        self.trees.iter().map(|t| t.predict(x)).collect()
    }

    pub fn mean(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict(x)).sum::<f64>() / self.trees.len() as f64
    }

    /// Number of splits on each column across all trees.
    pub fn split_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.categorical.len()];
        for t in &self.trees {
            for node in &t.nodes {
                match node {
                    Node::Numeric { column, .. } | Node::Categorical { column, .. } => {
                        counts[*column] += 1
                    }
                    Node::Leaf { .. } => {}
                }
            }
        }
        counts
    }
}

impl Surrogate for ForestModel {
    fn predict(&self, x: &[f64]) -> (f64, f64) {
        mean_var(&self.tree_predictions(x))
    }
}

struct TreeBuilder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    categorical: &'a [bool],
    min_leaf: usize,
    max_depth: usize,
    m_try: usize,
}

enum Split {
    Numeric(f64),
    Categorical(Vec<usize>),
}

impl TreeBuilder<'_> {
    fn build<R: Rng>(&self, idx: Vec<usize>, rng: &mut R) -> Tree {
        let mut nodes = Vec::new();
        self.grow(&mut nodes, idx, 0, rng);
        Tree { nodes }
    }

    fn grow<R: Rng>(&self, nodes: &mut Vec<Node>, idx: Vec<usize>, depth: usize, rng: &mut R) -> usize {
        let id = nodes.len();
        let mean = idx.iter().map(|&i| self.y[i]).sum::<f64>() / idx.len() as f64;
        nodes.push(Node::Leaf { value: mean });
        let constant = idx.iter().all(|&i| self.y[i] == self.y[idx[0]]);
        if constant || depth >= self.max_depth || idx.len() < 2 * self.min_leaf {
            return id;
        }
        let Some((column, split)) = self.best_split(&idx, rng) else {
            return id;
        };
        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| {
            let v = self.x[i][column];
            match &split {
                Split::Numeric(t) => v <= *t,
                Split::Categorical(cats) => cats.binary_search(&(v as usize)).is_ok(),
            }
        });
        let left = self.grow(nodes, left_idx, depth + 1, rng);
        let right = self.grow(nodes, right_idx, depth + 1, rng);
        nodes[id] = match split {
            Split::Numeric(threshold) => Node::Numeric {
                column,
                threshold,
                left,
                right,
            },
            Split::Categorical(categories) => Node::Categorical {
                column,
                categories,
                left,
                right,
            },
        };
        id
    }

    /// Best split among `m_try` random columns; falls back to the remaining
    /// columns when none of the sampled ones admits a split.
    fn best_split<R: Rng>(&self, idx: &[usize], rng: &mut R) -> Option<(usize, Split)> {
        let mut columns: Vec<usize> = (0..self.categorical.len()).collect();
        columns.shuffle(rng);
        let mut best: Option<(f64, usize, Split)> = None;
        for (k, &c) in columns.iter().enumerate() {
            if k >= self.m_try && best.is_some() {
                break;
            }
            let found = if self.categorical[c] {
                self.categorical_split(idx, c)
            } else {
                self.numeric_split(idx, c)
            };
            if let Some((gain, split)) = found {
                if best.as_ref().is_none_or(|(g, _, _)| gain > *g) {
                    best = Some((gain, c, split));
                }
            }
        }
        best.map(|(_, c, s)| (c, s))
    }

    fn numeric_split(&self, idx: &[usize], c: usize) -> Option<(f64, Split)> {
        let mut pairs: Vec<(f64, f64)> = idx.iter().map(|&i| (self.x[i][c], self.y[i])).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let n = pairs.len();
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        let base = total * total / n as f64;
        let mut left_sum = 0.0;
        let mut best: Option<(f64, f64)> = None;
        for i in 0..n - 1 {
            left_sum += pairs[i].1;
            let n_left = i + 1;
            if pairs[i].0 == pairs[i + 1].0 || n_left < self.min_leaf || n - n_left < self.min_leaf {
                continue;
            }
            let right_sum = total - left_sum;
            let gain = left_sum * left_sum / n_left as f64 + right_sum * right_sum / (n - n_left) as f64 - base;
            if best.is_none_or(|(g, _)| gain > g) {
                best = Some((gain, 0.5 * (pairs[i].0 + pairs[i + 1].0)));
            }
        }
        best.filter(|(g, _)| *g > 1e-12 * (1.0 + base.abs()))
            .map(|(g, t)| (g, Split::Numeric(t)))
    }

    /// Orders categories by mean response and scans prefix splits, which is
    /// optimal for squared-error regression.
    fn categorical_split(&self, idx: &[usize], c: usize) -> Option<(f64, Split)> {
        let mut stats: Vec<(usize, f64, usize)> = Vec::new();
        for &i in idx {
            let cat = self.x[i][c] as usize;
            match stats.iter_mut().find(|s| s.0 == cat) {
                Some(s) => {
                    s.1 += self.y[i];
                    s.2 += 1;
                }
                None => stats.push((cat, self.y[i], 1)),
            }
        }
        if stats.len() < 2 {
            return None;
        }
        stats.sort_by(|a, b| (a.1 / a.2 as f64).total_cmp(&(b.1 / b.2 as f64)).then(a.0.cmp(&b.0)));
        let n = idx.len();
        let total: f64 = stats.iter().map(|s| s.1).sum();
        let base = total * total / n as f64;
        let (mut left_sum, mut n_left) = (0.0, 0);
        let mut best: Option<(f64, usize)> = None;
        for (k, s) in stats.iter().enumerate().take(stats.len() - 1) {
            left_sum += s.1;
            n_left += s.2;
            if n_left < self.min_leaf || n - n_left < self.min_leaf {
                continue;
            }
            let right_sum = total - left_sum;
            let gain = left_sum * left_sum / n_left as f64 + right_sum * right_sum / (n - n_left) as f64 - base;
            if best.is_none_or(|(g, _)| gain > g) {
                best = Some((gain, k));
            }
        }
        let (gain, k) = best.filter(|(g, _)| *g > 1e-12 * (1.0 + base.abs()))?;
        let mut cats: Vec<usize> = stats[..=k].iter().map(|s| s.0).collect();
        cats.sort_unstable();
        Some((gain, Split::Categorical(cats)))
    }
}
