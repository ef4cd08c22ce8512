use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("singular system: zero pivot at row {row}")]
    SingularSystem { row: usize },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("solver diverged at iteration {iteration}: residual {residual:e} exceeds {limit:e}")]
    Diverged { iteration: usize, residual: f64, limit: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
