use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::pgm::PgmError;
use crate::xyz::XyzError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] fgfrft::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Pgm { path: PathBuf, source: PgmError },

    #[error("{path}: {source}")]
    Xyz { path: PathBuf, source: XyzError },

    #[error("{path}: {message}")]
    Manifest { path: PathBuf, message: String },
}

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const USAGE: i32 = 2;
    pub const NUMERICAL: i32 = 3;
    pub const IO: i32 = 4;
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        use fgfrft::Error as E;
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::Core(e) => match e {
                E::Size(_) | E::Parameter(_) | E::Domain(_) | E::Shape(_) | E::Capacity(_) => {
                    exit::USAGE
                }
                E::Numerical { .. }
                | E::Optimizer { .. }
                | E::Undefined(_)
                | E::StaleCache { .. } => exit::NUMERICAL,
            },
            CliError::Io { .. }
            | CliError::Pgm { .. }
            | CliError::Xyz { .. }
            | CliError::Manifest { .. } => exit::IO,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn read_file(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path).map_err(|e| CliError::io(path, e))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}
