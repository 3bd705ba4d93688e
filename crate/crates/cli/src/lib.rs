//! Experiment runner for `asep-core`: validated configs, seeded replica
//! fan-out, versioned CSV results, JSON summaries and run manifests.

pub mod config;
pub mod error;
pub mod experiments;
pub mod oracle_cmd;
pub mod output;
pub mod runner;
pub mod summary;

pub use config::{parse_config, ExperimentConfig};
pub use error::{CliError, Result};
pub use runner::{run, summarize, RunReport, OUTPUT_ROOT_ENV};
