//! File formats, parallel drivers and subcommands for the `hvspec` binary.

use std::{io, path::PathBuf};

pub mod commands;
pub mod files;
pub mod json;
pub mod parallel;
pub mod schema;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Malformed arguments, config or input content.
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io { .. } => 3,
        }
    }
}

impl From<hvspec_core::Error> for CliError {
    fn from(e: hvspec_core::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}
