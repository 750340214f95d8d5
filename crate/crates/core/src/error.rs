use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: expected N={expected}, got N={actual}")]
    GridMismatch { expected: usize, actual: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid spectral density: {0}")]
    InvalidDensity(String),

    #[error("nonzero mean mode: coefficient at n=(0,0) is {0:e}")]
    NonzeroMeanMode(f64),

    #[error("degenerate power-law fit: {0}")]
    DegenerateFit(String),

    #[error("Cholesky factorization failed (jitter escalated to {jitter:e})")]
    Factorization { jitter: f64 },

    #[error("location ({0}, {1}) is not on the grid")]
    OffGrid(i64, i64),

    #[error("inadmissible parameters: {0}")]
    Inadmissible(String),

    #[error("malformed field dump: {0}")]
    MalformedDump(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Factorization { .. } | Error::DegenerateFit(_))
    }
}
