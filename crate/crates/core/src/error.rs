use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected n={expected}, got n={found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("grid error: {0}")]
    Grid(String),

    #[error("{solver} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("contraction failed: factor {factor:.3} >= 1 (interaction too strong for the fixed point)")]
    ContractionFailure { factor: f64 },

    #[error("bubble collision: interaction parameter {eps:.3} exceeds the weak-interaction guard {guard}")]
    BubbleCollision { eps: f64, guard: f64 },

    #[error("quadrature error: {0}")]
    Quadrature(String),

    #[error("malformed grid file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
