//! Experiment runner behind the `wilkinson-harness` binary.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;

pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};
pub use experiments::{run, Command, Figure, Outcome};
