use thiserror::Error;

/// Errors raised by set construction, parsing and the set calculus.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SetError {
    /// Norm groups do not partition the coefficient indices.
    #[error("partition error: {0}")]
    Partition(String),
    /// Matrix or vector dimensions disagree.
    #[error("shape error: {0}")]
    Shape(String),
    /// Norm selector outside {1, 2, inf}, or a norm not allowed by a specialised constructor.
    #[error("norm error: {0}")]
    Norm(String),
    /// Inner radius outside [0, 1), or a negative/non-finite radius.
    #[error("radius error: {0}")]
    Radius(String),
    /// Malformed input text.
    #[error("parse error: {0}")]
    Parse(String),
    /// The equality system `A x = b` has no solution.
    #[error("affine system infeasible (least-squares residual {residual:e})")]
    AffineInfeasible { residual: f64 },
    /// Operation requires a particular ambient dimension.
    #[error("dimension error: expected ambient dimension {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },
    /// Rejection sampling accepted too few candidates.
    #[error("sampling exhausted: accepted {accepted} of {attempts} candidates")]
    SamplingExhausted { accepted: usize, attempts: usize },
    /// The requested operation leaves the single-hole class.
    #[error("unsupported operation: {0}")]
    UnsupportedOperation(String),
}

pub type Result<T> = std::result::Result<T, SetError>;
