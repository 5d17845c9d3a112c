use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: String, actual: String },

    #[error("invalid quantum state: {0}")]
    InvalidState(String),

    #[error("matrix is not Hermitian (max |h - h^dagger| = {0:e})")]
    NotHermitian(f64),

    #[error("expectation value has imaginary part {0:e}")]
    NonRealExpectation(f64),

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("input {0} outside [-1, 1]")]
    InputOutOfRange(f64),

    #[error("{0} requires {1} qubits")]
    UnsupportedQubitCount(&'static str, usize),

    #[error("empty input series")]
    EmptyInput,

    #[error("washout {washout} is shorter than reset length {reset_length}")]
    WashoutTooShort { washout: usize, reset_length: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("density-matrix invariant violated at step {step}: {detail}")]
    InvariantViolation { step: usize, detail: String },

    #[error("least-squares system is singular (rank {rank} of {cols} columns)")]
    Singular { rank: usize, cols: usize },

    #[error("target has zero variance")]
    ZeroVariance,

    #[error("insufficient history: first step {first_step} cannot reach delay {delay}")]
    InsufficientHistory { first_step: usize, delay: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dims(expected: impl ToString, actual: impl ToString) -> Self {
        Error::DimensionMismatch {
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }
}
