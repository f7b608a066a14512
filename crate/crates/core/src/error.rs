use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{name} {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("epsilon = 0 is an exact resonance: the epsilon-classical engine is inapplicable, use the quantum engine")]
    QuantumOnly,

    #[error("invalid ensemble mode `{0}` (expected `theory` or `physical`)")]
    InvalidMode(String),

    #[error("basis leakage: edge occupancy {occupancy:.3e} exceeds {tolerance:.0e} with basis half-width {halfwidth}")]
    Leakage {
        halfwidth: usize,
        occupancy: f64,
        tolerance: f64,
    },

    #[error("reference and observed curves do not overlap in x")]
    EmptyOverlap,

    #[error("output ordering violated: {0}")]
    Ordering(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
