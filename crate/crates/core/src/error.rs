use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {what}: expected {expected}, got {got}")]
    Shape {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    TrainingDiverged { epoch: usize },

    #[error(
        "attack {attack_id} failed on example {example_index} (restart {restart}, step {step}): {reason}"
    )]
    AttackFailed {
        example_index: usize,
        attack_id: String,
        restart: usize,
        step: usize,
        reason: String,
    },

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("config error at line {line}, field `{field}`: {message}")]
    Config {
        line: usize,
        field: String,
        message: String,
    },

    #[error("data error in {source_name} at line {line}: {message}")]
    Data {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("model file {path}: {message}")]
    ModelFormat { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    /// Process exit code used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Contract(_) => 2,
            Error::Data { .. } | Error::ModelFormat { .. } | Error::Io(_) | Error::Csv(_) => 3,
            Error::Shape { .. } => 3,
            Error::TrainingDiverged { .. } | Error::AttackFailed { .. } => 4,
        }
    }
}
