use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::kernel::Kernel;
use super::Surrogate;
use crate::linalg::Cholesky;
use crate::math::{exp, ln, mean_var, sqrt};
use crate::space::EncodedVector;
use crate::{Error, Result};

const JITTER_LADDER: [f64; 6] = [0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6];
const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Gaussian process regressor.
///
/// Targets are standardized to zero mean and unit variance before fitting; the
/// kernel variance and `noise` are expressed in standardized units. With
/// `K = [k(x_i, x_j)]` and `k = [k(x_i, q)]` the predictive distribution is
///
/// ```text
/// mean(q) = k^T (K + noise I)^{-1} y
/// var(q)  = k(q, q) - k^T (K + noise I)^{-1} k
/// ```
///
/// mapped back to the original target scale.
#[derive(Debug, Clone)]
pub struct GpModel {
    kernel: Kernel,
    noise: f64,
    jitter: f64,
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
    y_mean: f64,
    y_scale: f64,
    chol: Option<Cholesky>,
    alpha: Vec<f64>,
}

impl GpModel {
    /// A model without data: predicts the prior mean 0 and variance `k(q, q)`.
    pub fn prior(kernel: Kernel, noise: f64) -> Self {
        GpModel {
            kernel,
            noise,
            jitter: 0.0,
            x: Vec::new(),
            y: Vec::new(),
            y_mean: 0.0,
            y_scale: 1.0,
            chol: None,
            alpha: Vec::new(),
        }
    }

    /// Fits the model. On a failed factorization the jitter is escalated from
    /// `1e-10` to `1e-6` before giving up with [`Error::Conditioning`].
    pub fn fit(x: Vec<Vec<f64>>, y: &[f64], kernel: Kernel, noise: f64) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::InvalidArgument("x and y lengths differ".into()));
        }
        if !(noise >= 0.0) {
            return Err(Error::InvalidArgument("noise must be non-negative".into()));
        }
        kernel.validate()?;
        if x.is_empty() {
            return Ok(Self::prior(kernel, noise));
        }
        let width = x[0].len();
        if x.iter().any(|r| r.len() != width) || kernel.min_width() > width {
            return Err(Error::LayoutMismatch("training rows do not match the kernel".into()));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite target".into()));
        }

        let (y_mean, var) = mean_var(y);
        let sd = sqrt(var);
        let y_scale = if sd > 1e-12 && y.len() > 1 { sd } else { 1.0 };
        let ys: Vec<f64> = y.iter().map(|v| (v - y_mean) / y_scale).collect();

        let n = x.len();
        let k = covariance_matrix(&kernel, &x);
        let max_diag = (0..n).map(|i| k[i * n + i]).fold(0.0, f64::max);
        let mut a = k.clone();
        for &jitter in &JITTER_LADDER {
            for i in 0..n {
                a[i * n + i] = k[i * n + i] + noise + jitter;
            }
            if let Some(chol) = Cholesky::factor(&a, n) {
                // reject numerically singular factorizations too
                let l = chol.factor_matrix();
                let min_pivot = (0..n).map(|i| l[i * n + i] * l[i * n + i]).fold(f64::INFINITY, f64::min);
                if min_pivot < 1e-13 * max_diag.max(1e-300) {
                    continue;
                }
                let alpha = chol.solve(&ys);
                return Ok(GpModel {
                    kernel,
                    noise,
                    jitter,
                    x,
                    y: ys,
                    y_mean,
                    y_scale,
                    chol: Some(chol),
                    alpha,
                });
            }
        }
        Err(Error::Conditioning {
            jitter: JITTER_LADDER[JITTER_LADDER.len() - 1],
        })
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    /// Jitter that was added to the diagonal to make the factorization succeed.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Mean and scale used to standardize targets.
    pub fn standardization(&self) -> (f64, f64) {
        (self.y_mean, self.y_scale)
    }

    /// Predictive mean and variance, with a layout check.
    pub fn predict_encoded(&self, q: &EncodedVector) -> Result<(f64, f64)> {
        let width = self.x.first().map_or(self.kernel.min_width(), Vec::len);
        if q.coords.len() != width || q.coords.len() < self.kernel.min_width() {
            return Err(Error::LayoutMismatch("query width differs from training data".into()));
        }
        Ok(self.predict(&q.coords))
    }

    /// Predictive distribution in standardized units.
    fn predict_standardized(&self, q: &[f64]) -> (f64, f64) {
        let prior_var = self.kernel.eval(q, q);
        let Some(chol) = &self.chol else {
            return (0.0, prior_var.max(0.0));
        };
        let mut kq: Vec<f64> = self.x.iter().map(|xi| self.kernel.eval(xi, q)).collect();
        let mean = kq.iter().zip(&self.alpha).map(|(a, b)| a * b).sum::<f64>();
        chol.solve_lower_in_place(&mut kq);
        let var = prior_var - kq.iter().map(|v| v * v).sum::<f64>();
        (mean, var.max(0.0))
    }

    /// Log marginal likelihood of the standardized targets.
    pub fn log_marginal_likelihood(&self) -> f64 {
        match &self.chol {
            None => 0.0,
            Some(chol) => {
                let fit = self.y.iter().zip(&self.alpha).map(|(a, b)| a * b).sum::<f64>();
                -0.5 * fit - 0.5 * chol.log_det() - 0.5 * self.y.len() as f64 * LN_2PI
            }
        }
    }

    /// Leave-one-out predictive means, on the original target scale.
    pub fn loo_means(&self) -> Vec<f64> {
        let Some(chol) = &self.chol else {
            return Vec::new();
        };
        let inv_diag = chol.inverse_diagonal();
        self.y
            .iter()
            .zip(&self.alpha)
            .zip(&inv_diag)
            .map(|((y, a), d)| self.y_mean + self.y_scale * (y - a / d))
            .collect()
    }
}

impl Surrogate for GpModel {
    fn predict(&self, q: &[f64]) -> (f64, f64) {
        let (m, v) = self.predict_standardized(q);
        (self.y_mean + self.y_scale * m, self.y_scale * self.y_scale * v)
    }
}

/// Dense covariance matrix `K_ij = k(x_i, x_j)` in row-major order.
pub fn covariance_matrix(kernel: &Kernel, x: &[Vec<f64>]) -> Vec<f64> {
    let n = x.len();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let v = kernel.eval(&x[i], &x[j]);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    k
}

/// Settings of the multi-restart marginal-likelihood search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperSearch {
    pub restarts: usize,
    /// Likelihood evaluations allowed per restart.
    pub evals_per_restart: usize,
    pub lengthscale_bounds: (f64, f64),
    pub variance_bounds: (f64, f64),
    pub noise_bounds: (f64, f64),
    pub seed: u64,
}

impl Default for HyperSearch {
    fn default() -> Self {
        HyperSearch {
            restarts: 5,
            evals_per_restart: 150,
            lengthscale_bounds: (0.01, 20.0),
            variance_bounds: (0.05, 20.0),
            noise_bounds: (1e-6, 1.0),
            seed: 0,
        }
    }
}

/// Maximizes the log marginal likelihood over log-lengthscales, log signal
/// variance and log noise with a multi-restart coordinate search.
///
/// The first restart starts from `template`'s current hyperparameters and
/// `initial_noise`; the rest start uniformly at random inside the bounds. If
/// every candidate fails to factorize, unit lengthscales are returned.
pub fn fit_hypers(
    x: &[Vec<f64>],
    y: &[f64],
    template: &Kernel,
    initial_noise: f64,
    search: &HyperSearch,
) -> Result<(Kernel, f64)> {
    if x.len() < 2 {
        return Err(Error::InsufficientData("hyperparameter search needs two points".into()));
    }
    let n_ls = template.n_hypers() - 1;
    let mut lo = vec![ln(search.lengthscale_bounds.0); n_ls];
    let mut hi = vec![ln(search.lengthscale_bounds.1); n_ls];
    lo.push(ln(search.variance_bounds.0));
    hi.push(ln(search.variance_bounds.1));
    lo.push(ln(search.noise_bounds.0));
    hi.push(ln(search.noise_bounds.1));
    let dim = lo.len();

    let x = x.to_vec();
    let mut kernel = template.clone();
    let mut objective = |p: &[f64]| -> f64 {
        kernel.set_log_hypers(&p[..dim - 1]);
        match GpModel::fit(x.clone(), y, kernel.clone(), exp(p[dim - 1])) {
            Ok(m) => {
                let v = m.log_marginal_likelihood();
                if v.is_finite() {
                    v
                } else {
                    f64::NEG_INFINITY
                }
            }
            Err(_) => f64::NEG_INFINITY,
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(search.seed);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for restart in 0..search.restarts.max(1) {
        let start: Vec<f64> = if restart == 0 {
            let mut p = template.log_hypers();
            p.push(ln(initial_noise.max(search.noise_bounds.0)));
            p.iter().zip(lo.iter().zip(&hi)).map(|(v, (l, h))| v.clamp(*l, *h)).collect()
        } else {
            lo.iter().zip(&hi).map(|(l, h)| rng.gen_range(*l..=*h)).collect()
        };
        let (value, p) = coordinate_search(&mut objective, start, &lo, &hi, search.evals_per_restart);
        if value.is_finite() && best.as_ref().is_none_or(|(b, _)| value > *b) {
            best = Some((value, p));
        }
    }

    let mut out = template.clone();
    match best {
        Some((_, p)) => {
            out.set_log_hypers(&p[..dim - 1]);
            Ok((out, exp(p[dim - 1])))
        }
        None => {
            log::warn!("hyperparameter search failed to condition; using unit lengthscales");
            out.reset_lengthscales(1.0);
            Ok((out, initial_noise.max(search.noise_bounds.0)))
        }
    }
}

/// Compass search: tries `+-step` along each coordinate, halving the step
/// after a sweep without improvement.
fn coordinate_search<F: FnMut(&[f64]) -> f64>(
    f: &mut F,
    mut p: Vec<f64>,
    lo: &[f64],
    hi: &[f64],
    max_evals: usize,
) -> (f64, Vec<f64>) {
    let mut value = f(&p);
    let mut evals = 1;
    let mut step = 1.0;
    while step > 0.05 && evals < max_evals {
        let mut improved = false;
        for i in 0..p.len() {
            for dir in [1.0, -1.0] {
                if evals >= max_evals {
                    break;
                }
                let old = p[i];
                let cand = (old + dir * step).clamp(lo[i], hi[i]);
                if cand == old {
                    continue;
                }
                p[i] = cand;
                let v = f(&p);
                evals += 1;
                if v > value {
                    value = v;
                    improved = true;
                    break;
                }
                p[i] = old;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (value, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surrogate::kernel::Stationary;

    fn rbf(d: usize, l: f64) -> Kernel {
        Kernel::Rbf(Stationary::new((0..d).collect(), l, 1.0))
    }

    #[test]
    fn prior_prediction() {
        let m = GpModel::fit(Vec::new(), &[], rbf(2, 1.0), 0.1).unwrap();
        assert_eq!(m.predict(&[0.3, 0.4]), (0.0, 1.0));
    }

    #[test]
    fn single_point_interpolates() {
        let m = GpModel::fit(vec![vec![0.2, 0.7]], &[3.5], rbf(2, 0.5), 0.0).unwrap();
        let (mean, var) = m.predict(&[0.2, 0.7]);
        assert!((mean - 3.5).abs() < 1e-12);
        assert!(var <= 1e-8);
    }

    #[test]
    fn two_point_direct_solve() {
        // K = [[1, e], [e, 1]], e = exp(-0.5 * 0.25); q at 0.25
        let x = vec![vec![0.0], vec![0.5]];
        let y = [1.0, -1.0];
        let noise = 0.01;
        let m = GpModel::fit(x, &y, rbf(1, 1.0), noise).unwrap();
        let e = libm::exp(-0.125);
        let (a, b, c) = (1.0 + noise, e, 1.0 + noise);
        let det = a * c - b * b;
        let inv = [c / det, -b / det, -b / det, a / det];
        let k = [libm::exp(-0.5 * 0.0625), libm::exp(-0.5 * 0.0625)];
        // standardized targets are (+1, -1); scale 1, mean 0
        let ys = [1.0, -1.0];
        let alpha = [inv[0] * ys[0] + inv[1] * ys[1], inv[2] * ys[0] + inv[3] * ys[1]];
        let mean = k[0] * alpha[0] + k[1] * alpha[1];
        let kinvk = k[0] * (inv[0] * k[0] + inv[1] * k[1]) + k[1] * (inv[2] * k[0] + inv[3] * k[1]);
        let (pm, pv) = m.predict(&[0.25]);
        assert!((pm - mean).abs() < 1e-12);
        assert!((pv - (1.0 - kinvk)).abs() < 1e-12);
    }

    #[test]
    fn duplicated_rows_without_noise_do_not_crash() {
        let x = vec![vec![0.5], vec![0.5], vec![0.5]];
        match GpModel::fit(x, &[1.0, 1.0, 2.0], rbf(1, 1.0), 0.0) {
            Ok(m) => {
                assert!(m.jitter() > 0.0);
                let (mean, var) = m.predict(&[0.5]);
                assert!(mean.is_finite() && var >= 0.0);
            }
            Err(e) => assert!(matches!(e, Error::Conditioning { .. })),
        }
    }

    #[test]
    fn covariance_is_symmetric() {
        let x: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64 * 0.1, 1.0 - i as f64 * 0.15]).collect();
        let k = covariance_matrix(&rbf(2, 0.3), &x);
        for i in 0..6 {
            for j in 0..6 {
                assert!((k[i * 6 + j] - k[j * 6 + i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn loo_matches_refit() {
        let x: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64 * 0.2]).collect();
        let y = [0.3, 1.0, 0.2, -0.5, 0.1];
        let kernel = rbf(1, 0.4);
        let m = GpModel::fit(x.clone(), &y, kernel.clone(), 0.05).unwrap();
        let loo = m.loo_means();
        // A refit without point i must use the same standardization to compare.
        let (mu, sd) = m.standardization();
        for i in 0..5 {
            let xs: Vec<Vec<f64>> = x.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, r)| r.clone()).collect();
            let ys: Vec<f64> = y.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, v)| (v - mu) / sd).collect();
            let n = xs.len();
            let mut k = covariance_matrix(&kernel, &xs);
            for d in 0..n {
                k[d * n + d] += 0.05;
            }
            let alpha = Cholesky::factor(&k, n).unwrap().solve(&ys);
            let pred: f64 = xs.iter().zip(&alpha).map(|(r, a)| kernel.eval(r, &x[i]) * a).sum();
            assert!((loo[i] - (mu + sd * pred)).abs() < 1e-9);
        }
    }

    #[test]
    fn hyper_search_is_deterministic() {
        let x: Vec<Vec<f64>> = (0..12).map(|i| vec![(i as f64 * 0.37) % 1.0]).collect();
        let y: Vec<f64> = x.iter().map(|r| libm::sin(6.0 * r[0])).collect();
        let search = HyperSearch { seed: 3, ..Default::default() };
        let a = fit_hypers(&x, &y, &rbf(1, 1.0), 1e-3, &search).unwrap();
        let b = fit_hypers(&x, &y, &rbf(1, 1.0), 1e-3, &search).unwrap();
        assert_eq!(a, b);
        assert!(fit_hypers(&x[..1], &y[..1], &rbf(1, 1.0), 1e-3, &search).is_err());
    }

    #[test]
    fn constant_targets_predict_constant() {
        let x: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64 / 8.0]).collect();
        let y = [4.0; 8];
        let (k, noise) = fit_hypers(&x, &y, &rbf(1, 1.0), 1e-3, &HyperSearch::default()).unwrap();
        let m = GpModel::fit(x, &y, k, noise).unwrap();
        for q in [0.0, 0.33, 0.9] {
            assert!((m.predict(&[q]).0 - 4.0).abs() < 1e-9);
        }
    }
}
