use thiserror::Error;

/// Errors raised by network construction, metric evaluation and the estimators.
///
/// Matrix positions in messages are 1-based, matching the file formats.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is asymmetric at ({}, {})", .row + 1, .col + 1)]
    Asymmetric { row: usize, col: usize },
    #[error("nonzero diagonal at ({}, {})", .index + 1, .index + 1)]
    NonzeroDiagonal { index: usize },
    #[error("weight {value} out of [0, 1] at ({}, {})", .row + 1, .col + 1)]
    OutOfRange { row: usize, col: usize, value: f64 },
    #[error("non-finite weight at ({}, {})", .row + 1, .col + 1)]
    NonFinite { row: usize, col: usize },
    #[error("index {} out of range for {n} nodes", .index + 1)]
    IndexOutOfRange { index: usize, n: usize },
    #[error("shape mismatch: expected {expected} nodes, found {found}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("network has zero total weight")]
    EmptyNetwork,
    #[error("finite-difference step must be positive")]
    NonPositiveStep,
    #[error("metric {kind} is missing {what}")]
    MissingAttachment { kind: &'static str, what: &'static str },
    #[error("target value must be finite")]
    NonFiniteTarget,
    #[error("no targets supplied")]
    NoTargets,
    #[error("cost became non-finite at iteration {iter}; reduce the learning rate")]
    NonFiniteCost { iter: usize },
    #[error("reconstruction error increased for {streak} consecutive outer iterations")]
    ScheduleStall { streak: usize },
    #[error("missing-entry mask has no missing entries")]
    EmptyMask,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("noisy matrix is identically zero after clamping")]
    DegenerateAllZero,
    #[error("reference matrix equals the true matrix; error ratio undefined")]
    ZeroReferenceError,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for NetError {
    fn from(e: std::io::Error) -> Self {
        NetError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, NetError>;
