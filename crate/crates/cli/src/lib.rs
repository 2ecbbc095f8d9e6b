//! Library side of the `charges` command-line tool: input formats,
//! subcommand dispatch and the built-in demo experiments.

use std::path::PathBuf;

use thiserror::Error;

pub mod commands;
pub mod demos;
pub mod io;

pub use commands::{run, Cli, Command, ExperimentConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] charges_core::Error),

    #[error("{0}")]
    Domain(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{}:{line}:{column}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        msg: String,
    },
}

impl CliError {
    /// 1 for domain and invariant errors, 2 for I/O and malformed input.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(_) | CliError::Domain(_) => 1,
            CliError::Io { .. } | CliError::Parse { .. } => 2,
        }
    }
}
