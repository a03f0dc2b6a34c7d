//! Configuration, sweep execution and file formats behind the `numsqueeze`
//! command.
//!
//! A run is described by one JSON document ([`config::RunConfig`]) and
//! produces `results.csv`, `meta.json` and, for TW runs,
//! `density_t1_t2.csv` plus an optional trajectory spool.

pub mod config;
pub mod error;
pub mod runner;
pub mod spool;
pub mod table;
pub mod verify;

pub use config::{preset, Axis, Engine, RunConfig, PRESETS};
pub use error::{CliError, CliResult};
pub use runner::{execute, run, RunOutput};
pub use table::{read_results, write_results, ResultRow};
