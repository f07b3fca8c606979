//! Experiment runner: parses a JSON config, runs one task against
//! `contact-core` and writes a JSON report plus CSV tables.

pub mod config;
pub mod error;
pub mod report;
pub mod runner;

pub use config::{ExperimentConfig, Task};
pub use error::CliError;
pub use report::Artifacts;
pub use runner::run;

/// Exit status of a run that completed but failed one of its checks.
pub const EXIT_ASSERTION: i32 = 2;
/// Exit status of a schema or runtime error.
pub const EXIT_ERROR: i32 = 1;
