use thiserror::Error;

/// Unified error type for the crate.
///
/// `Validation`-class variants signal misuse of an API contract (bad factor
/// kind, mismatched spaces, inadequate truncation); `NonConverged` signals a
/// propagation whose accuracy diagnostics failed. Callers that map errors to
/// process exit codes should treat `NonConverged` separately.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("factor {index} is not {expected}")]
    WrongFactorKind { index: usize, expected: &'static str },

    #[error("factor index {index} out of range for space with {count} factors")]
    FactorOutOfRange { index: usize, count: usize },

    #[error("operands live on different spaces: {0}")]
    SpaceMismatch(String),

    #[error("entry ({row}, {col}) outside dimension {dim}")]
    EntryOutOfRange { row: usize, col: usize, dim: usize },

    #[error("dimension {dim} exceeds the {what} cap of {cap}")]
    DimensionCap {
        dim: usize,
        what: &'static str,
        cap: usize,
    },

    #[error("truncation too small: {0}")]
    Truncation(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("propagation did not converge: {0}")]
    NonConverged(String),

    #[error("eigendecomposition failed: {0}")]
    Linalg(String),
}

pub type Result<T> = std::result::Result<T, Error>;
