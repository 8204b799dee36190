use thiserror::Error;

/// Errors raised by the solvers and their building blocks.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("bundle is full and every slot is protected")]
    BundleExhausted,
    #[error("slot {slot} is out of range for a bundle holding {count} entries")]
    SlotOutOfRange { slot: usize, count: usize },
    #[error("weights are not in the simplex (sum {sum}, min {min})")]
    NotInSimplex { sum: f64, min: f64 },
    #[error("Lipschitz search failed after {0} increases")]
    LipschitzSearch(usize),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
