//! Subcommands and scenario files of the `clothslide` binary.

pub mod commands;
pub mod config;
pub mod error;

pub use commands::{execute, Cli};
pub use config::ScenarioConfig;
pub use error::{CliError, CliResult};
