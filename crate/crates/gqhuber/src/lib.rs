//! Experiment harness for the generalized quantile Huber loss family.
//!
//! Reads a JSON [`config::ExperimentConfig`], trains every (loss arm, seed)
//! pair in parallel with [`gqhuber_core`], and writes `records.csv`,
//! `summary.csv` and SVG training curves.

pub mod chart;
pub mod config;
mod error;
pub mod io;
pub mod mdp_file;
pub mod records;
pub mod runner;
pub mod summary;

pub use error::{Diagnostic, Error, Result};
pub use gqhuber_core;
