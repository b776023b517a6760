//! Regression surrogates with predictive uncertainty.

mod forest;
mod gp;
mod kernel;
mod parzen;

pub use forest::{ForestModel, ForestParams, Node, Tree};
pub use gp::{covariance_matrix, fit_hypers, GpModel, HyperSearch};
pub use kernel::{kernel_eval, Kernel, KernelFamily, Stationary};
pub use parzen::{KnobDensity, ParzenPair};

/// A model exposing a Gaussian predictive distribution at encoded points.
pub trait Surrogate {
    /// Predictive `(mean, variance)` at an encoded point.
    fn predict(&self, x: &[f64]) -> (f64, f64);
}
