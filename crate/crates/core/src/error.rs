use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate state")]
    DegenerateState,
    #[error("times not ascending")]
    TimesNotAscending,
    #[error("time count mismatch: expected {expected}, got {got}")]
    TimeCountMismatch { expected: usize, got: usize },
    #[error("invalid spacing: {0}")]
    InvalidSpacing(f64),
    #[error("inequality never violated")]
    NeverViolated,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid inequality: {0}")]
    InvalidInequality(String),
}

pub type Result<T> = std::result::Result<T, Error>;
