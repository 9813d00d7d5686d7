use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("unknown key {key:?}; valid keys: {valid}")]
    UnknownKey { key: String, valid: String },

    #[error("missing required key {0:?}")]
    MissingKey(&'static str),

    #[error("invalid value for {key}: {message}")]
    InvalidValue { key: String, message: String },

    #[error("{key} out of range: {invariant}")]
    Range { key: String, invariant: String },

    #[error("config has no sweep axis; use `run`")]
    NoSweep,

    #[error("config defines a sweep axis; use `sweep`")]
    UnexpectedSweep,

    #[error(transparent)]
    Core(#[from] sqbath::Error),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    /// Process exit code: 2 for configuration problems, 3 for integrator aborts.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(sqbath::Error::Aborted { .. }) => 3,
            CliError::Io { .. } => 1,
            _ => 2,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
