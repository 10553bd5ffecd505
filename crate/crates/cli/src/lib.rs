//! Scenario runner for the `foldflash` converter model.
//!
//! A scenario is a flat `key = value` file (see `docs/config.md`). The
//! runner converts the configured stimulus and writes a JSON report plus
//! optional CSVs.

// NaN must fail validation, so checks are written as `!(x > 0.0)`.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod runner;
pub mod scenario;
pub mod units;

pub use config::{Config, ConfigError};
pub use runner::{run_scenario, sweep, write_outputs, write_sweep, OutputFormat, Report, RunError, RunOutput};
pub use scenario::Scenario;
