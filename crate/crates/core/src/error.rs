use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("input is empty")]
    EmptyInput,

    #[error("element {index} is negative ({value})")]
    NegativeElement { index: usize, value: f64 },

    #[error("element {index} is not finite")]
    NonFinite { index: usize },

    #[error("elements sum to zero")]
    ZeroSum,

    #[error("dimension {dim} is too small (need at least {min})")]
    DimTooSmall { dim: usize, min: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("remaining mass before coordinate {index} is below 1e-300")]
    DegenerateTail { index: usize },

    #[error("pair producing coordinate {index} sums below 1e-300")]
    DegeneratePair { index: usize },

    #[error("coordinate {index} = {value} lies outside (0, 1)")]
    OutOfRange { index: usize, value: f64 },

    #[error("invalid Dirichlet concentration at {index}: {value}")]
    InvalidAlpha { index: usize, value: f64 },

    #[error("invalid mixture weights: {0}")]
    InvalidWeights(String),

    #[error("invalid distribution parameters: {0}")]
    InvalidParams(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("too few samples: {got} (need at least {min})")]
    TooFewSamples { got: usize, min: usize },

    #[error("too few permutations: {got} (need at least {min})")]
    TooFewPermutations { got: usize, min: usize },

    #[error("experiment configuration mismatch: {0}")]
    ConfigMismatch(String),
}
