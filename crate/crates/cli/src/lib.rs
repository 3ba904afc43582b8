//! Library side of the `sae` command-line tool.

pub mod commands;
pub mod config;
pub mod error;

pub use config::{ConfigArgs, RunConfig};
pub use error::{CliError, CliResult, ErrorKind};
