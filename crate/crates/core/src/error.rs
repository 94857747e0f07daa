use std::io;

/// Errors produced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("vector or matrix contains a non-finite entry at index {index}")]
    NonFinite { index: usize },

    #[error("empty vector")]
    Empty,

    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("quadratic form has imaginary residue {residue:e} for measurement {index}")]
    ImaginaryResidue { index: usize, residue: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("decomposition hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("decomposition exceeded {max} atoms")]
    TooManyAtoms { max: usize },

    #[error("stability condition violated: margin {margin} <= 0")]
    ConditionViolated { margin: f64 },

    #[error("vectors are not phase aligned: <x, y> = {re} + {im}i")]
    NotPhaseAligned { re: f64, im: f64 },

    #[error("solver diverged after {} iterations", trace.len())]
    Diverged { trace: Vec<f64> },

    #[error("malformed ensemble file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
