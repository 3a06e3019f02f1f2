use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (max |X - X^dagger| = {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not unitary (max |U^dagger U - I| = {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("invalid process POVM: {0}")]
    InvalidPpovm(String),

    #[error("test state has support outside the required subspace (residual {residual:e})")]
    SupportMismatch { residual: f64 },

    #[error("probability {value:e} is outside [0, 1] beyond numerical tolerance")]
    ProbabilityOutOfRange { value: f64 },

    #[error("prior probability must lie strictly inside (0, 1), got {0}")]
    InvalidPrior(f64),

    #[error("operator is the identity up to a global phase (distance {distance:e})")]
    IdentityUpToPhase { distance: f64 },

    #[error("malformed matrix data: {0}")]
    MalformedMatrix(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
