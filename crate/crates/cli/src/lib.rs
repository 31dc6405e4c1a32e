//! Experiment runner for the phonon-pulse simulation toolkit.
//!
//! Reads declarative JSON configurations (optionally starting from a named
//! preset), runs the requested experiment and writes CSV series, a plot
//! script and a `manifest.json` describing the run.

pub mod app;
pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod reproduce;

pub use error::{CliError, CliResult};
