use c2_core::graph::GraphError;
use c2_core::period::{GuardFailure, PeriodError};
use c2_core::poly::OracleError;
use c2_core::transfer::{CheckpointError, TransferError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Transfer(#[from] TransferError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Period(#[from] PeriodError),
    #[error("period guard rejected the run: {0}")]
    Guard(#[from] GuardFailure),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Verification(String),
}

impl CliError {
    pub fn io(path: impl AsRef<std::path::Path>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.as_ref().display().to_string();
        move |source| CliError::Io { path, source }
    }

    /// 2 for bad input, 3 for a resource ceiling, 4 for a failed check.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Oracle(OracleError::OutOfRange { .. }) | CliError::Transfer(TransferError::TooManyStates { .. }) => 3,
            CliError::Guard(_) | CliError::Verification(_) => 4,
            _ => 2,
        }
    }
}
