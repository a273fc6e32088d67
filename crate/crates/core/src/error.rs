use alloc::string::String;

/// Errors raised by the separation numerics.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An input broke an operation's precondition (non-Hermitian, indefinite, bad coefficients).
    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is singular")]
    Singular,

    /// The requested source/channel layout is not supported by the engine.
    #[error("unsupported configuration: {0}")]
    UnsupportedConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A non-finite value appeared in the iterates.
    #[error("separation diverged at iteration {iteration}")]
    Diverged { iteration: usize },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::ContractViolation(msg.into())
}
