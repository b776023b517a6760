//! Files, external objectives, tournaments and the command line around
//! [`knobtune_core`].
//!
//! Formats:
//!
//! - space documents and configuration JSON ([`spacefile`]),
//! - trajectory and training CSVs ([`table`]),
//! - benchmark artifacts ([`benchfile`]),
//! - source-task archives ([`archive`]),
//! - experiment plans, manifests and summaries ([`experiment`]).

pub mod archive;
pub mod benchfile;
pub mod cli;
pub mod dataset;
mod error;
pub mod experiment;
pub mod objective;
pub mod spacefile;
pub mod table;

pub use error::{Error, Result};
pub use knobtune_core as core;
