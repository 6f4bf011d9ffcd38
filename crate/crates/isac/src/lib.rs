//! Experiment runner for interference-resilient OFDM waveform design.
//!
//! Reads a TOML experiment config, runs the design chain from `isac-core`
//! over seeded Monte Carlo trials and writes CSV/JSON artifacts plus a run
//! manifest.

pub mod commands;
pub mod config;
pub mod error;
pub mod experiments;
pub mod output;

pub use commands::{run, Command};
pub use config::{ExperimentConfig, Overrides};
pub use error::{AppError, Result};
