//! Command-line front end: configuration, initial conditions, snapshots
//! and output files for the ADM Boussinesq solver.
pub mod config;
pub mod output;
pub mod presets;
pub mod runner;
pub mod snapshot;

pub use config::{parse_config, ConfigError, RunConfig};
pub use runner::{Options, RunError, RunSummary};
