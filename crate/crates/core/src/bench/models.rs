//! Regression models competing as benchmark surrogates.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::linalg::Cholesky;
use crate::math::{mean_var, sqrt};
use crate::space::{ConfigSpace, Configuration, Scheme};
use crate::surrogate::{ForestModel, ForestParams};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Rf,
    Knn,
    Ridge,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Rf, ModelKind::Knn, ModelKind::Ridge];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Rf => "rf",
            ModelKind::Knn => "knn",
            ModelKind::Ridge => "ridge",
        }
    }

    /// Encoding the model is trained on.
    pub fn scheme(self) -> Scheme {
        match self {
            ModelKind::Rf => Scheme::Raw,
            ModelKind::Knn | ModelKind::Ridge => Scheme::UnitOneHot,
        }
    }
}

impl core::str::FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(alloc::format!("unknown model `{s}`")))
    }
}

/// Hyperparameters of one candidate model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelParams {
    Rf(ForestParams),
    Knn { k: usize, distance_weighted: bool },
    Ridge { alpha: f64 },
}

impl ModelParams {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelParams::Rf(_) => ModelKind::Rf,
            ModelParams::Knn { .. } => ModelKind::Knn,
            ModelParams::Ridge { .. } => ModelKind::Ridge,
        }
    }
}

/// A fitted regression model over a configuration space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RegressionModel {
    Rf(ForestModel),
    Knn {
        k: usize,
        distance_weighted: bool,
        x: Vec<Vec<f64>>,
        y: Vec<f64>,
    },
    Ridge {
        alpha: f64,
        intercept: f64,
        coef: Vec<f64>,
    },
}

impl RegressionModel {
    pub fn fit(space: &ConfigSpace, configs: &[Configuration], y: &[f64], params: &ModelParams, seed: u64) -> Result<Self> {
        if configs.len() != y.len() {
            return Err(Error::InvalidArgument("configs and y lengths differ".into()));
        }
        if configs.is_empty() {
            return Err(Error::InsufficientData("no training data".into()));
        }
        let x = space.encode_all(configs, params.kind().scheme());
        Self::fit_encoded(space, x, y, params, seed)
    }

    /// Fits on rows already encoded with `params.kind().scheme()`.
    pub fn fit_encoded(space: &ConfigSpace, x: Vec<Vec<f64>>, y: &[f64], params: &ModelParams, seed: u64) -> Result<Self> {
        match *params {
            ModelParams::Rf(p) => {
                let categorical: Vec<bool> = space.knobs().iter().map(|k| k.is_categorical()).collect();
                Ok(RegressionModel::Rf(ForestModel::fit(&x, y, &categorical, &p, seed)?))
            }
            ModelParams::Knn { k, distance_weighted } => {
                if k == 0 {
                    return Err(Error::InvalidArgument("k must be positive".into()));
                }
                Ok(RegressionModel::Knn {
                    k,
                    distance_weighted,
                    x,
                    y: y.to_vec(),
                })
            }
            ModelParams::Ridge { alpha } => ridge_fit(&x, y, alpha),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            RegressionModel::Rf(_) => ModelKind::Rf,
            RegressionModel::Knn { .. } => ModelKind::Knn,
            RegressionModel::Ridge { .. } => ModelKind::Ridge,
        }
    }

    /// Prediction for a row encoded with `self.kind().scheme()`.
    pub fn predict_encoded(&self, row: &[f64]) -> f64 {
        match self {
            RegressionModel::Rf(f) => f.mean(row),
            RegressionModel::Knn {
                k,
                distance_weighted,
                x,
                y,
            } => knn_predict(x, y, *k, *distance_weighted, row),
            RegressionModel::Ridge { intercept, coef, .. } => {
                intercept + coef.iter().zip(row).map(|(c, v)| c * v).sum::<f64>()
            }
        }
    }

    pub fn predict(&self, space: &ConfigSpace, config: &Configuration) -> f64 {
        let mut row = Vec::new();
        space.encode_into(config, self.kind().scheme(), &mut row);
        self.predict_encoded(&row)
    }

    /// Row width the model expects, when it is recorded in the model.
    pub fn input_width(&self) -> Option<usize> {
        match self {
            RegressionModel::Rf(f) => Some(f.categorical.len()),
            RegressionModel::Knn { x, .. } => x.first().map(Vec::len),
            RegressionModel::Ridge { coef, .. } => Some(coef.len()),
        }
    }
}

fn knn_predict(x: &[Vec<f64>], y: &[f64], k: usize, distance_weighted: bool, row: &[f64]) -> f64 {
    let mut d: Vec<(f64, usize)> = x
        .iter()
        .enumerate()
        .map(|(i, r)| (r.iter().zip(row).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(), i))
        .collect();
    let k = k.min(d.len());
    d.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let nearest = &mut d[..k];
    nearest.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    if !distance_weighted {
        return nearest.iter().map(|(_, i)| y[*i]).sum::<f64>() / k as f64;
    }
    let exact: Vec<f64> = nearest.iter().filter(|(dist, _)| *dist == 0.0).map(|(_, i)| y[*i]).collect();
    if !exact.is_empty() {
        return exact.iter().sum::<f64>() / exact.len() as f64;
    }
    let (mut num, mut den) = (0.0, 0.0);
    for (dist, i) in nearest.iter() {
        let w = 1.0 / sqrt(*dist);
        num += w * y[*i];
        den += w;
    }
    num / den
}

/// Ridge regression with an unpenalized intercept on centered columns.
fn ridge_fit(x: &[Vec<f64>], y: &[f64], alpha: f64) -> Result<RegressionModel> {
    if !(alpha >= 0.0) {
        return Err(Error::InvalidArgument("ridge alpha must be non-negative".into()));
    }
    let n = x.len();
    let d = x.first().map_or(0, Vec::len);
    let (y_mean, _) = mean_var(y);
    let means: Vec<f64> = (0..d).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
    let mut gram = vec![0.0; d * d];
    let mut rhs = vec![0.0; d];
    for (r, yi) in x.iter().zip(y) {
        let c: Vec<f64> = r.iter().zip(&means).map(|(v, m)| v - m).collect();
        for a in 0..d {
            rhs[a] += c[a] * (yi - y_mean);
            for b in a..d {
                gram[a * d + b] += c[a] * c[b];
            }
        }
    }
    for a in 0..d {
        for b in 0..a {
            gram[a * d + b] = gram[b * d + a];
        }
    }
    // a tiny ridge floor keeps one-hot blocks (collinear with the intercept) solvable
    let mut jitter = alpha.max(1e-10);
    let coef = loop {
        let mut g = gram.clone();
        for a in 0..d {
            g[a * d + a] += jitter;
        }
        if let Some(ch) = Cholesky::factor(&g, d) {
            break ch.solve(&rhs);
        }
        jitter *= 10.0;
        if jitter > 1e6 {
            return Err(Error::Conditioning { jitter });
        }
    };
    let intercept = y_mean - coef.iter().zip(&means).map(|(c, m)| c * m).sum::<f64>();
    Ok(RegressionModel::Ridge { alpha, intercept, coef })
}
