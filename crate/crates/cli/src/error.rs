use std::path::PathBuf;

use phonon_pulse_core::Error as CoreError;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    /// A physical invariant failed during the computation.
    #[error(transparent)]
    Physics(CoreError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("checks failed: {}", .0.join(", "))]
    CheckFailed(Vec<String>),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        Self::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Physics(_) => 3,
            Self::Io { .. } => 4,
            Self::CheckFailed(_) => 5,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Config(_) => "config",
            Self::Physics(_) => "physics",
            Self::Io { .. } => "io",
            Self::CheckFailed(_) => "check",
        }
    }

    /// One-line JSON record for stderr.
    pub fn report(&self) -> String {
        #[derive(Serialize)]
        struct Report<'a> {
            error: &'a str,
            exit_code: i32,
            message: String,
        }
        serde_json::to_string(&Report { error: self.kind(), exit_code: self.exit_code(), message: self.to_string() })
            .unwrap_or_else(|_| self.to_string())
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidDimension { .. } | CoreError::InvalidParameter { .. } | CoreError::DimensionMismatch { .. } => {
                Self::Config(e.to_string())
            }
            _ => Self::Physics(e),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
