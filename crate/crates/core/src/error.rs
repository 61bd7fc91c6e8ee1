use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dimension must be at least 2 (got {0})")]
    DimensionTooSmall(usize),

    #[error("state is not normalized (norm² = {0})")]
    NotNormalized(f64),

    #[error("matrix is not unitary (max |U†U - I| = {0:e})")]
    NotUnitary(f64),

    #[error("target coherence {c} outside [0, {max}]")]
    CoherenceOutOfRange { c: f64, max: f64 },

    #[error("coherence is zero: quantity is undefined for incoherent states")]
    Incoherent,

    #[error("basis index {k} has zero overlap with the prepared state")]
    ZeroOverlap { k: usize },

    #[error("basis index {k} out of range for dimension {dim}")]
    IndexOutOfRange { k: usize, dim: usize },

    #[error("oracle call budget of {0} exhausted")]
    BudgetExceeded(u64),

    #[error("joint register of {ancilla}x{system} amplitudes exceeds the simulation envelope of {limit}")]
    EnvelopeExceeded {
        ancilla: usize,
        system: usize,
        limit: usize,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
