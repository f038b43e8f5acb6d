use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum QlmError {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("{what} needs dimension {needed}, budget is {budget}")]
    BudgetExceeded {
        what: String,
        needed: usize,
        budget: usize,
    },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid charges: {0}")]
    InvalidCharges(String),

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("flux {flux} outside truncation range [-{s}, {s}]")]
    FluxOutOfRange { flux: i32, s: u32 },

    #[error("basis mismatch: {left} vs {right}")]
    BasisMismatch { left: String, right: String },

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("operator is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("operator leaks out of the physical subspace (max leaked amplitude {0:e})")]
    NotBlockDiagonal(f64),

    #[error("ambiguous kernel: spectral gap {gap:e} around threshold {threshold:e}")]
    AmbiguousKernel { gap: f64, threshold: f64 },

    #[error("state is not available in this basis: {0}")]
    MissingState(String),

    #[error("zero vector: {0}")]
    ZeroVector(String),

    #[error("error absorbed by truncation on link {0}")]
    AbsorbedByTruncation(usize),

    #[error("matrix is not unitary (deviation {0:e})")]
    NotUnitary(f64),

    #[error("lapack routine {routine} failed with info {info}")]
    Lapack { routine: &'static str, info: i32 },

    #[error("serialization: {0}")]
    Serialization(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, QlmError>;

impl From<serde_json::Error> for QlmError {
    fn from(e: serde_json::Error) -> Self {
        QlmError::Serialization(e.to_string())
    }
}

pub(crate) fn check_budget(what: impl Into<String>, needed: usize, budget: usize) -> Result<()> {
    if needed > budget {
        Err(QlmError::BudgetExceeded {
            what: what.into(),
            needed,
            budget,
        })
    } else {
        Ok(())
    }
}
