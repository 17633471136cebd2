use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("bin width must be positive and finite, got {0}")]
    InvalidWidth(f64),

    #[error("non-finite coordinate {value} on axis {axis}")]
    NonFinite { axis: usize, value: f64 },

    #[error("bin index overflow: quotient {0} does not fit in a 64-bit integer")]
    IndexOverflow(f64),

    #[error("no data")]
    NoData,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("peak region too heavy; shrink h0 or peak_value (peak mass {0:.6})")]
    PeakTooHeavy(f64),

    #[error("degenerate: increase resolution or reduce c")]
    Degenerate,

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
