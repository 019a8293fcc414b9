//! Batch runner: configuration, execution of the requested methods and CSV output.

pub mod config;
pub mod output;
pub mod runner;

pub use config::{parse, ConfigErrors, RunConfig};
pub use runner::{run, run_file, RunError, RunOptions, RunSummary};
