use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::math::{exp, ln, sqrt};
use crate::space::{EncodedVector, Layout};
use crate::{Error, Result};

const SQRT_5: f64 = 2.236_067_977_499_79;

/// Parameters of a single stationary kernel acting on a subset of columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Stationary {
    pub columns: Vec<usize>,
    pub lengthscales: Vec<f64>,
    pub variance: f64,
}

impl Stationary {
    pub fn new(columns: Vec<usize>, lengthscale: f64, variance: f64) -> Self {
        let lengthscales = vec![lengthscale; columns.len()];
        Stationary {
            columns,
            lengthscales,
            variance,
        }
    }

    fn scaled_sq_dist(&self, a: &[f64], b: &[f64]) -> f64 {
        self.columns
            .iter()
            .zip(&self.lengthscales)
            .map(|(&c, &l)| {
                let d = (a[c] - b[c]) / l;
                d * d
            })
            .sum()
    }

    fn weighted_mismatch(&self, a: &[f64], b: &[f64]) -> f64 {
        self.columns
            .iter()
            .zip(&self.lengthscales)
            .filter(|(&c, _)| (a[c] - b[c]).abs() > 1e-12)
            .map(|(_, &l)| 1.0 / l)
            .sum()
    }
}

/// Covariance functions over encoded vectors.
///
/// The Hamming kernel is `s^2 * exp(-sum_i [a_i != b_i] / l_i)` over its
/// columns. A linear mismatch form `s^2 * (1 - mean mismatch)` is a common
/// alternative; the exponential form keeps products with other kernels
/// positive definite for any lengthscale.
#[derive(Debug, Clone, PartialEq)]
pub enum Kernel {
    Rbf(Stationary),
    Matern52(Stationary),
    Hamming(Stationary),
    Product(Vec<Kernel>),
}

/// Kernel families used by the Bayesian optimizers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelFamily {
    /// RBF over every column.
    Rbf,
    /// Matérn 5/2 over every column.
    Matern52,
    /// Matérn 5/2 over numeric columns times Hamming over categorical columns.
    Mixed,
}

impl KernelFamily {
    /// Builds a kernel with unit lengthscales and variance for `layout`.
    pub fn build(self, layout: &Layout) -> Kernel {
        let all: Vec<usize> = (0..layout.width()).collect();
        match self {
            KernelFamily::Rbf => Kernel::Rbf(Stationary::new(all, 1.0, 1.0)),
            KernelFamily::Matern52 => Kernel::Matern52(Stationary::new(all, 1.0, 1.0)),
            KernelFamily::Mixed => {
                let numeric = layout.numeric_columns();
                let categorical = layout.categorical_columns();
                match (numeric.is_empty(), categorical.is_empty()) {
                    (false, true) => Kernel::Matern52(Stationary::new(numeric, 1.0, 1.0)),
                    (true, false) => Kernel::Hamming(Stationary::new(categorical, 1.0, 1.0)),
                    _ => Kernel::Product(vec![
                        Kernel::Matern52(Stationary::new(numeric, 1.0, 1.0)),
                        Kernel::Hamming(Stationary::new(categorical, 1.0, 1.0)),
                    ]),
                }
            }
        }
    }
}

impl Kernel {
    /// Checks positivity of parameters and disjointness of product components.
    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        self.validate_into(&mut seen)
    }

    fn validate_into(&self, seen: &mut BTreeSet<usize>) -> Result<()> {
        match self {
            Kernel::Product(parts) => parts.iter().try_for_each(|p| p.validate_into(seen)),
            Kernel::Rbf(s) | Kernel::Matern52(s) | Kernel::Hamming(s) => {
                if s.columns.len() != s.lengthscales.len() {
                    return Err(Error::InvalidArgument("one lengthscale per column required".into()));
                }
                if !(s.variance > 0.0) || s.lengthscales.iter().any(|l| !(*l > 0.0)) {
                    return Err(Error::InvalidArgument("kernel parameters must be positive".into()));
                }
                for c in &s.columns {
                    if !seen.insert(*c) {
                        return Err(Error::InvalidArgument(format!(
                            "column {c} used by more than one kernel component"
                        )));
                    }
                }
                Ok(())
            }
        }
    }

    /// Largest column index referenced plus one.
    pub fn min_width(&self) -> usize {
        match self {
            Kernel::Product(parts) => parts.iter().map(Kernel::min_width).max().unwrap_or(0),
            Kernel::Rbf(s) | Kernel::Matern52(s) | Kernel::Hamming(s) => {
                s.columns.iter().map(|c| c + 1).max().unwrap_or(0)
            }
        }
    }

    /// Evaluates the kernel on two points without layout checks.
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Kernel::Rbf(s) => s.variance * exp(-0.5 * s.scaled_sq_dist(a, b)),
            Kernel::Matern52(s) => {
                let r = sqrt(s.scaled_sq_dist(a, b));
                s.variance * (1.0 + SQRT_5 * r + 5.0 / 3.0 * r * r) * exp(-SQRT_5 * r)
            }
            Kernel::Hamming(s) => s.variance * exp(-s.weighted_mismatch(a, b)),
            Kernel::Product(parts) => parts.iter().map(|p| p.eval(a, b)).product(),
        }
    }

    /// `k(x, x)`.
    pub fn diag(&self) -> f64 {
        match self {
            Kernel::Rbf(s) | Kernel::Matern52(s) | Kernel::Hamming(s) => s.variance,
            Kernel::Product(parts) => parts.iter().map(Kernel::diag).product(),
        }
    }

    fn leaves(&self) -> Vec<&Stationary> {
        match self {
            Kernel::Product(parts) => parts.iter().flat_map(Kernel::leaves).collect(),
            Kernel::Rbf(s) | Kernel::Matern52(s) | Kernel::Hamming(s) => vec![s],
        }
    }

    fn leaves_mut(&mut self) -> Vec<&mut Stationary> {
        match self {
            Kernel::Product(parts) => parts.iter_mut().flat_map(Kernel::leaves_mut).collect(),
            Kernel::Rbf(s) | Kernel::Matern52(s) | Kernel::Hamming(s) => vec![s],
        }
    }

    /// Number of free hyperparameters: every lengthscale plus one overall variance.
    pub fn n_hypers(&self) -> usize {
        self.leaves().iter().map(|s| s.lengthscales.len()).sum::<usize>() + 1
    }

    /// Log-lengthscales of all components followed by the log of the overall
    /// signal variance.
    pub fn log_hypers(&self) -> Vec<f64> {
        let mut p: Vec<f64> = self
            .leaves()
            .iter()
            .flat_map(|s| s.lengthscales.iter().map(|l| ln(*l)))
            .collect();
        p.push(ln(self.diag()));
        p
    }

    /// Inverse of [`Kernel::log_hypers`]. The overall variance is carried by
    /// the first component; the others get unit variance.
    pub fn set_log_hypers(&mut self, p: &[f64]) {
        let mut i = 0;
        let last = p[p.len() - 1];
        for (j, s) in self.leaves_mut().into_iter().enumerate() {
            for l in s.lengthscales.iter_mut() {
                *l = exp(p[i]);
                i += 1;
            }
            s.variance = if j == 0 { exp(last) } else { 1.0 };
        }
    }

    /// Sets every lengthscale to `l` (used as a conditioning fallback).
    pub fn reset_lengthscales(&mut self, l: f64) {
        for s in self.leaves_mut() {
            s.lengthscales.iter_mut().for_each(|v| *v = l);
        }
    }
}

/// Evaluates `k(a, b)` after checking both vectors share a layout wide enough
/// for the kernel.
pub fn kernel_eval(k: &Kernel, a: &EncodedVector, b: &EncodedVector) -> Result<f64> {
    if a.layout != b.layout || a.coords.len() != b.coords.len() {
        return Err(Error::LayoutMismatch("kernel arguments use different layouts".into()));
    }
    if k.min_width() > a.coords.len() {
        return Err(Error::LayoutMismatch(format!(
            "kernel needs {} columns, vectors have {}",
            k.min_width(),
            a.coords.len()
        )));
    }
    Ok(k.eval(&a.coords, &b.coords))
}
