use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },

    #[error(transparent)]
    Core(#[from] fwmg::Error),

    #[error("{0}")]
    Input(String),

    #[error("optimization did not converge: {0}")]
    NotConverged(String),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn json(path: &Path, source: serde_json::Error) -> Self {
        CliError::Json {
            path: path.to_path_buf(),
            source,
        }
    }

    /// 2 for bad input, 3 for numerical failure, 1 for anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => 2,
            CliError::Io { .. } => 1,
            CliError::Json { .. } | CliError::Input(_) => 2,
            CliError::Core(e) => match e {
                fwmg::Error::InvalidArgument(_)
                | fwmg::Error::InsufficientData(_)
                | fwmg::Error::DegenerateTrajectory(_) => 2,
                fwmg::Error::Infeasible(_) | fwmg::Error::Numerical(_) => 3,
            },
            CliError::NotConverged(_) => 3,
        }
    }
}
