//! Core algorithms for tuning heterogeneous configuration spaces.
//!
//! The crate is `no_std` and only needs `alloc`. It covers:
//!
//! - [`space`]: typed knob spaces, encodings, Latin hypercube and uniform sampling.
//! - [`surrogate`]: Gaussian processes over mixed kernels, random forests, Parzen estimators.
//! - [`acquisition`]: expected improvement and its maximization over mixed spaces.
//! - [`optimize`]: ask/tell tuning sessions for the optimizer families.
//! - [`importance`]: knob importance measurements and selection helpers.
//! - [`transfer`]: ranking-weighted GP ensembles, workload mapping, transfer metrics.
//! - [`bench`]: surrogate benchmarks, model selection and ranking tables.
//!
//! File formats, process spawning and the command line live in the companion
//! `knobtune` crate.
#![no_std]
// NaN-rejecting guards are written as negated comparisons on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod acquisition;
pub mod bench;
mod error;
pub mod importance;
pub mod linalg;
mod math;
pub mod optimize;
pub mod space;
pub mod surrogate;
pub mod transfer;

pub use error::{Error, Result};
pub use optimize::{History, Observation, OptimizerKind, Sense, Status, TuningSession};
pub use space::{ConfigSpace, Configuration, KnobKind, KnobSpec, Value};
