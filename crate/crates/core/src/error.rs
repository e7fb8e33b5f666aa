use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("{what} row {row} is not a probability distribution: {reason}")]
    InvalidDistribution {
        what: String,
        row: String,
        reason: String,
    },

    #[error("discount factor must lie in [0, 1), got {0}")]
    InvalidDiscount(f64),

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("reward r[{state}][{action}] = {value} lies outside [0, 1]")]
    RewardOutOfBox {
        state: usize,
        action: usize,
        value: f64,
    },

    #[error("reward is not a member of the feasible set ({violations} violated conditions)")]
    NotMember { violations: usize },

    #[error("operation does not support constraint mode {0}")]
    UnsupportedMode(&'static str),

    #[error("index out of range: {what} = {index}, bound {bound}")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        bound: usize,
    },

    #[error("linear program dimension {dim} exceeds the cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("polytope is empty")]
    EmptyPolytope,

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
