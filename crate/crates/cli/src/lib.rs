//! Command-line front end: JSON configs in, JSON reports out. Every command
//! re-derives its answer twice where a dense oracle exists and records each
//! residual next to the tolerance it was judged against.

pub mod commands;
pub mod config;
pub mod error;
pub mod instance;
pub mod oracle;
pub mod report;

pub use commands::{run, RunOptions};
pub use config::{load_config, Config, COMMANDS};
pub use error::CliError;
pub use report::{Check, Report};
