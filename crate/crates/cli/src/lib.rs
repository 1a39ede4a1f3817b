//! Command-line front end: configuration loading and the subcommands.

pub mod commands;
pub mod config;
pub mod error;
pub mod plot;

pub use config::{Loaded, RunConfig};
pub use error::CliError;
