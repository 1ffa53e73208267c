//! Experiment drivers for the R-MUSIC estimators: spectrum demo, timing
//! sweeps, RMSE Monte Carlo, low-rank bound check and snapshot dumps.
//!
//! Every driver returns its records so they can be checked in-process; the
//! `write_*` functions persist them as CSV with a header row.

pub mod bound;
pub mod cli;
pub mod config;
pub mod demo;
pub mod error;
pub mod output;
pub mod rmse;
pub mod simulate;
pub mod timing;
pub mod trial;

pub use config::{ExperimentConfig, ExperimentKind};
pub use error::{HarnessError, Result};
