//! Harness-level errors, partitioned the way the CLI exit codes need them:
//! configuration problems versus numerical failures.

use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid config at {path}{location}: {message}")]
    Config {
        path: PathBuf,
        /// Field path and line information when available, e.g.
        /// ` (problem.q, line 7)`.
        location: String,
        message: String,
    },

    #[error("invalid config: {0}")]
    Validation(String),

    #[error(transparent)]
    Numerical(#[from] lqr_ac_core::Error),
}

impl Error {
    /// CLI exit code class: 2 for configuration, 3 for numerical failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Io { .. } | Error::Config { .. } | Error::Validation(_) => 2,
            Error::Numerical(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
