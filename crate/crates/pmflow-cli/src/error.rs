use std::path::PathBuf;

use pmflow::error::ErrorClass;
use pmflow::PmError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Model(#[from] PmError),

    /// A solve finished without converging; its artifacts are already on disk.
    #[error("solve did not converge; see {}", .0.display())]
    Unconverged(PathBuf),

    /// Verification ran and at least one check failed.
    #[error("verification failed; see {}", .0.display())]
    Failed(PathBuf),

    #[error("{failed} sweep points have no converged solution")]
    Sweep { failed: usize, code: i32 },

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// 2: bad configuration, 3: parameters outside the admissible domain,
    /// 4: numerical failure, 1: file system.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Model(e) => match e.class() {
                ErrorClass::Config => 2,
                ErrorClass::Domain => 3,
                ErrorClass::Numerical => 4,
            },
            CliError::Unconverged(_) | CliError::Failed(_) => 4,
            CliError::Sweep { code, .. } => *code,
            CliError::Io { .. } => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
