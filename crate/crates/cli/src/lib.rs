//! Command-line surface of the `biorth` library: a TOML problem description
//! goes in, CSV artifacts and a key=value verification report come out.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 configuration or artifact error,
//! 3 numerical construction failure, 4 verification failure.

use std::path::PathBuf;

pub mod artifacts;
pub mod commands;
pub mod config;

pub use commands::{compute, moments, verify, VerifyFlags, VerifyOutcome};
pub use config::Config;

pub const EXIT_VERIFICATION_FAILED: u8 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid artifact: {0}")]
    Artifact(String),
    #[error("numerical failure: {0}")]
    Numerical(biorth::Error),
    #[error("cannot access {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Config(_) | CliError::Artifact(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<biorth::Error> for CliError {
    fn from(e: biorth::Error) -> Self {
        if e.is_spec_error() {
            CliError::Config(e.to_string())
        } else {
            CliError::Numerical(e)
        }
    }
}
