use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// A diagnostic anchored to a 1-based line and column of the input text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            column,
            message: message.into(),
        }
    }

    /// Builds a diagnostic from a byte offset into `text`.
    pub fn at_offset(text: &str, offset: usize, message: impl Into<String>) -> Self {
        let (line, column) = line_column(text, offset);
        Self::new(line, column, message)
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for ParseError {}

/// 1-based (line, column) of a byte offset. Offsets past the end map to the last position.
pub fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(text.len());
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = match before.rfind('\n') {
        Some(nl) => before[nl + 1..].chars().count() + 1,
        None => before.chars().count() + 1,
    };
    (line, column)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("not a DAG: directed cycle through {0}")]
    NotADag(String),

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("incomplete assignment: variable {0} has no state")]
    IncompleteAssignment(String),

    #[error("invalid evidence: {0}")]
    InvalidEvidence(String),

    #[error("zero evidence probability")]
    ZeroEvidence,

    #[error("state space too large: {size} assignments exceeds cap {cap}")]
    StateSpaceTooLarge { size: f64, cap: f64 },

    #[error("cutset instantiation count {count} exceeds cap {cap}")]
    CutsetTooLarge { count: f64, cap: usize },

    #[error("session exhausted")]
    SessionExhausted,

    #[error("horizon {requested} exceeds remaining steps {remaining}")]
    HorizonTooLong { requested: usize, remaining: usize },

    #[error("negative time {0}")]
    NegativeTime(f64),

    #[error("time {t} outside assessed range [{lo}, {hi}]")]
    OutOfAssessedRange { t: f64, lo: f64, hi: f64 },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{0}")]
    Parse(#[from] ParseError),
}
