//! Configuration, experiment orchestration and output for repeated-game
//! learning studies.

pub mod config;
pub mod error;
pub mod experiment;
pub mod output;
pub mod report;

pub use config::{parse_config, AlgorithmName, ExperimentConfig};
pub use error::CliError;
pub use experiment::{run_experiment, ExperimentResult, SeedStatus};
