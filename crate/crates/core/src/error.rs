use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("invalid dimension {0}: must be at least 1")]
    InvalidDimension(usize),

    #[error("expected {expected} entries for a square matrix, got {got}")]
    NotSquare { expected: usize, got: usize },

    #[error("state vector not normalized (norm² = {0})")]
    NotNormalized(f64),

    #[error("operator is not Hermitian (residue {0:e})")]
    NotHermitian(f64),

    #[error("density matrix trace {0} differs from 1")]
    BadTrace(f64),

    #[error("expectation value has imaginary part {0:e}")]
    ComplexExpectation(f64),

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("integration aborted at t = {t}: {reason}")]
    Aborted { t: f64, reason: String },

    #[error("empty trajectory record")]
    EmptyRecord,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
