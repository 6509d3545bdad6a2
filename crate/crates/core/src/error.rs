use thiserror::Error;

/// Crate-wide error type. Statistical rejection (conditioning) is not an
/// error; it is modeled as an enum outcome where it occurs.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an argument failed.
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// An enumeration or solver exceeded its work budget. `spent` is the
    /// number of budget units consumed when the walk was abandoned.
    #[error("work budget exceeded after {spent} units: {context}")]
    BudgetExceeded { spent: u64, context: &'static str },

    /// A pair computation would touch more pairs than the hard guard allows.
    #[error("pair count {count} exceeds guard of {guard}")]
    TooManyPairs { count: u128, guard: u128 },

    /// Every sampled trial produced a zero denominator, so a correlation
    /// is undefined.
    #[error("degenerate correlation: all {trials} trials had zero denominator")]
    DegenerateDenominator { trials: usize },

    /// A weighted sampler was given a path of zero total weight.
    #[error("zero-weight path at index {index}")]
    ZeroWeight { index: usize },

    /// An on-disk artifact failed to parse.
    #[error("parse error at line {line}: {what}")]
    Parse { line: usize, what: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParam(msg.into())
}
