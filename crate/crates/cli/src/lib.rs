//! File formats, orchestration and the command line for voting bloc inference.

pub mod cli;
pub mod commands;
pub mod error;
pub mod ingest;
pub mod manifest;
pub mod parallel;
pub mod products;
pub mod samples;

pub use cli::Cli;
pub use commands::run;
pub use error::{CliError, CliResult};
