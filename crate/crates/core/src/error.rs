use thiserror::Error;

/// Errors raised while building or checking terms and formulas.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("ill-sorted: {0}")]
    IllSorted(String),
    #[error("non-linear integer term: {0}")]
    NonLinear(String),
    #[error("internal error: {0}")]
    Internal(String),
}

/// Errors raised by the front end.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{line}:{column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("{line}:{column}: sort error: {message}")]
    Sort { line: usize, column: usize, message: String },
    #[error("unknown macro `{0}`")]
    UnknownMacro(String),
    #[error("macro `{name}` expects {expected} arguments, got {found}")]
    ArityMismatch { name: String, expected: usize, found: usize },
    #[error("macro `{0}` is recursive or refers to a later definition")]
    RecursiveMacro(String),
}

impl ParseError {
    pub fn is_sort_error(&self) -> bool {
        matches!(self, ParseError::Sort { .. })
    }
}

/// Raised when the solve deadline passes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("timeout")]
pub struct Timeout;
