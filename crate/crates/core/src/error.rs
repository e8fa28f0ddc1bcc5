use thiserror::Error;

/// Error type shared by all modules of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violates a precondition (dimensions, ranges, weights, ...).
    #[error("parameter error: {0}")]
    Parameter(String),
    /// Repeated numerically rank-deficient draws; the constraint is degenerate.
    #[error("sampling failure: {0}")]
    SamplingFailure(String),
    /// Input data is inconsistent with a structural guarantee (e.g. asymmetry).
    #[error("data error: {0}")]
    Data(String),
    /// The family has continuous support and cannot be enumerated exactly.
    #[error("not enumerable: {0}")]
    NotEnumerable(String),
    /// A size cap was exceeded (atom counts, matricization dimension, ...).
    #[error("size error: {0}")]
    Size(String),
    /// An operation was called in a state that does not support it.
    #[error("state error: {0}")]
    State(String),
    /// The estimated work exceeds the configured step budget.
    #[error("budget exceeded: {0}")]
    Budget(String),
}

pub type Result<T> = std::result::Result<T, Error>;
