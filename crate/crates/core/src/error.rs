use thiserror::Error;

/// Errors reported by the arithmetic, splitting and GEMM routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite value {0} rejected")]
    NonFinite(f64),

    #[error("power-of-two scaling by 2^{exponent} leaves the representable range")]
    ScaleOutOfRange { exponent: i64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("inner depth {k} is outside the supported range 1..={max}")]
    DepthOutOfRange { k: usize, max: usize },

    #[error("invalid blocking parameters: {0}")]
    InvalidBlocking(String),

    #[error("invalid generator request: {0}")]
    InvalidSpec(String),

    #[error("householder breakdown: column {0} is numerically zero")]
    Breakdown(usize),

    #[error("malformed matrix file: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
