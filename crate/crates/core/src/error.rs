//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not Hermitian (max asymmetry {max_dev:.3e} > {tol:.1e})")]
    NotHermitian { max_dev: f64, tol: f64 },

    #[error("matrix is not a density matrix: {0}")]
    NotDensityMatrix(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("non-finite loss at epoch {epoch}: {detail}")]
    NanLoss { epoch: usize, detail: String },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the CLI: config/validation problems exit with 2,
    /// runtime failures (including non-finite losses) with 3.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::InvalidArgument(_)
            | Error::DimensionMismatch(_)
            | Error::Dataset(_)
            | Error::Checkpoint(_) => 2,
            _ => 3,
        }
    }
}
