use std::io;
use std::path::PathBuf;

use l2hmi_core::drive::DriveError;
use l2hmi_core::experiment::ExperimentError;

use crate::{EXIT_CONFIG, EXIT_DIVERGENCE};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("drive: {0}")]
    Drive(DriveError),
    #[error("protocol: {0}")]
    Experiment(ExperimentError),
    #[error("client disconnected: {0}")]
    Disconnected(String),
    #[error("wire: {0}")]
    Wire(String),
    #[error("replay diverged at tick {tick} ({stage}): {detail}")]
    Divergence {
        tick: u64,
        stage: String,
        detail: String,
    },
    #[error("log integrity: {0}")]
    Tampered(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => EXIT_CONFIG,
            Error::Divergence { .. } | Error::Tampered(_) => EXIT_DIVERGENCE,
            _ => 1,
        }
    }
}

impl From<DriveError> for Error {
    fn from(e: DriveError) -> Self {
        Error::Drive(e)
    }
}

impl From<ExperimentError> for Error {
    fn from(e: ExperimentError) -> Self {
        Error::Experiment(e)
    }
}
