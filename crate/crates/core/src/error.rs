use thiserror::Error;

/// Errors raised by every module of the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed input data (non-finite entries, ragged literals, wrong lengths).
    #[error("invalid input: {0}")]
    Input(String),

    /// A numerical parameter outside its admissible range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// An argument outside the domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// The inputs make the requested quantity undefined (e.g. a 0/0 bound).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A hypothesis of the underlying inequality is violated.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Exhaustive enumeration would exceed the configured budget.
    #[error("budget exceeded: {0}")]
    Budget(String),

    /// The objective is not finite somewhere on the search window.
    #[error("search window error: {0}")]
    Window(String),

    /// An empirical check failed; the message lists the violations.
    #[error("verification failed: {0}")]
    Verification(String),
}

pub type Result<T> = std::result::Result<T, Error>;
