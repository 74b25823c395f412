use thiserror::Error;

/// Errors raised by the multiresolution routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum MrokError {
    #[error("basis order {0} outside supported range 1..=30")]
    OrderOutOfRange(usize),
    #[error("dimension {0} not supported (expected 1, 2 or 3)")]
    UnsupportedDimension(usize),
    #[error("point {0:?} lies outside the box")]
    PointOutsideBox(Vec<f64>),
    #[error("tree mismatch: {0}")]
    Mismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("quadrature failed to converge: {0}")]
    QuadratureFailure(String),
    #[error("gaussian expansion failed certification: {0}")]
    CertificationFailure(String),
    #[error("operator covers {op} scales but tree reaches scale {tree}")]
    TreeTooDeep { op: usize, tree: usize },
    #[error("instance too large for dense oracle: {0} unknowns")]
    InstanceTooLarge(usize),
    #[error("iteration did not converge after {0} steps")]
    NoConvergence(usize),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for MrokError {
    fn from(e: std::io::Error) -> Self {
        MrokError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, MrokError>;
