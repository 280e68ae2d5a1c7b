//! Experiment harness for the space-time multigrid solver: sweep runners, CSV
//! output and the configuration behind the `stmg` binary.

pub mod analysis;
pub mod config;
pub mod run;

pub use config::{ConfigError, ConfigFile, Experiment, ExperimentConfig, LevelRange, Overrides};
pub use run::{run_experiment, ResultRow};
