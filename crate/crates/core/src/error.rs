use thiserror::Error;

use crate::operators::EquationId;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("signature mismatch: {0} vs {1}")]
    SignatureMismatch(String, String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid signature: {0}")]
    InvalidSignature(String),
    #[error("frame index {index} out of range for dimension {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("grade {grade} out of range for dimension {n}")]
    GradeOutOfRange { grade: usize, n: usize },
    #[error("point {point:?} lies outside the chart (conformal factor {factor:e})")]
    OutsideChart { point: Vec<f64>, factor: f64 },
    #[error("division by a jet with zero value")]
    DivisionByZero,
    #[error("coefficient singularity: {0}")]
    Singular(String),
    #[error("precondition {equation} failed: residual {residual:e} exceeds {tolerance:e}")]
    Precondition {
        equation: EquationId,
        residual: f64,
        tolerance: f64,
    },
    #[error("form is not homogeneous: {0}")]
    NotHomogeneous(String),
    #[error("malformed field spec: {0}")]
    MalformedSpec(String),
    #[error("invalid pipeline: {0}")]
    InvalidPipeline(String),
    #[error("jet order {requested} exceeds the supported maximum {max}")]
    JetDepthExhausted { requested: usize, max: usize },
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
