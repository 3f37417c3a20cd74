//! Command-line front end of the wpcs simulator.
//!
//! Scenario files are flat `key = value` lists (see [`parse_config`]); the
//! commands turn them into self-describing CSV files.

pub mod commands;
mod config_file;
mod error;
pub mod format;
pub mod svg;

pub use commands::{compare_csv, run_csv, sweep, sweep_csv, SweepSpec};
pub use config_file::{parse_config, read_config};
pub use error::CliError;
