use std::io;
use std::path::PathBuf;

use thiserror::Error;
use tps_core::ErrorKind;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("line {line}: value {value} is not positive, cannot take its log")]
    NonPositiveForLog { line: u64, value: f64 },
    #[error("line {line}: cannot parse `{text}` in column `{column}`")]
    Parse { line: u64, column: String, text: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Core(#[from] tps_core::Error),
}

impl CliError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 for bad input, 3 for numerical breakdown, 4 for sampler failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) => match e.kind() {
                ErrorKind::Data => 2,
                ErrorKind::Numerical => 3,
                ErrorKind::Sampler => 4,
            },
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
