use std::path::PathBuf;

/// Errors raised by problem construction, the solvers and the data loaders.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("non-finite gradient at coordinate {index}")]
    NonFiniteGradient { index: usize },

    #[error("non-finite value at coordinate {index}")]
    NonFiniteInput { index: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular least-squares system (smallest singular value {smallest:e}, largest {largest:e})")]
    Singular { smallest: f64, largest: f64 },

    #[error("singular value decomposition did not converge")]
    SvdFailed,

    #[error("duplicate observation at ({row}, {col})")]
    DuplicateEntry { row: usize, col: usize },

    #[error("{}:{line}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{}: {msg}", path.display())]
    BadInput { path: PathBuf, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
