use std::path::{Path, PathBuf};

use flowcast_core::forecast::ForecastError;
use flowcast_core::ingest::FusionError;
use flowcast_core::quality::QualityError;
use flowcast_core::stats::StatsError;
use thiserror::Error;

/// Exit status for bad input: unreadable files, malformed rows, invalid
/// arguments.
pub const EXIT_INPUT: u8 = 2;
/// Exit status for numerical or degenerate failures.
pub const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}:{line}: {message}", .path.display())]
    Row {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("{}: {message}", .path.display())]
    Schema { path: PathBuf, message: String },
    #[error("{}: duplicate keys: {}", .path.display(), .keys.join("; "))]
    Duplicates { path: PathBuf, keys: Vec<String> },
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Fusion(#[from] FusionError),
    #[error(transparent)]
    Quality(#[from] QualityError),
    #[error(transparent)]
    Forecast(#[from] ForecastError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn row(path: &Path, line: u64, message: impl Into<String>) -> Self {
        CliError::Row {
            path: path.to_path_buf(),
            line,
            message: message.into(),
        }
    }

    pub fn schema(path: &Path, message: impl Into<String>) -> Self {
        CliError::Schema {
            path: path.to_path_buf(),
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Stats(_) => EXIT_NUMERICAL,
            CliError::Forecast(ForecastError::Stats(_) | ForecastError::EmptyCell { .. }) => {
                EXIT_NUMERICAL
            }
            CliError::Quality(QualityError::UnresolvableTargets(_)) => EXIT_NUMERICAL,
            _ => EXIT_INPUT,
        }
    }
}
