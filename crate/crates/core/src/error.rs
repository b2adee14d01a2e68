use thiserror::Error;

/// Errors reported by the weak-noise toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("assumption A.1 violated: d*max(a) - sum(a) = {lhs} exceeds q*C = {rhs}")]
    A1Violated { lhs: f64, rhs: f64 },

    #[error("oracle supports d <= {max}, got d = {d}")]
    DimensionTooLarge { d: usize, max: usize },

    #[error("degenerate converse grid: M_u*M_v - M_u - M_v = {value} <= 0")]
    DegenerateGrid { value: i64 },

    #[error("value {value} outside [0, 1]")]
    OutOfRange { value: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("path needs at least two points, got {0}")]
    EmptyPath(usize),

    #[error("noise variance is zero; density undefined")]
    ZeroVariance,

    #[error("cost {cost} at n = {n} is not positive")]
    NonpositiveCost { n: u32, cost: f64 },

    #[error("codebook of {size} codewords exceeds the exhaustive-decoding limit {limit}")]
    CodebookTooLarge { size: u128, limit: u64 },

    #[error("probe {probe} at n = {n} had no non-outage trial")]
    AllOutage { n: u32, probe: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("codebook file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
