//! Crate-wide error type.

use std::fmt;

#[derive(Debug)]
pub enum Error {
    /// A CSV row could not be parsed. `row` is the 1-based data-row index.
    Parse { row: usize, message: String },
    /// An input file contained no data rows.
    EmptyDataset,
    /// A precondition on an argument was violated.
    InvalidArgument(String),
    /// A vector's length does not match the expected dimension.
    DimensionMismatch { expected: usize, got: usize },
    /// A geometric degeneracy (e.g. bisector of two equal points).
    Degenerate(String),
    /// The LP solver failed (cycling, iteration cap, numerical trouble).
    Solver(String),
    /// An iterative scheme hit its iteration cap before converging.
    Convergence(String),
    /// No adversarial example exists (constant classifier).
    NoAdversarialExample,
    /// Every candidate region shares the original label; the caller may
    /// raise the region budget.
    NoCandidateRegion,
    /// A robust-region assignment places two points of different classes
    /// closer than the required separation.
    SeparationViolation {
        first: usize,
        second: usize,
        distance: f64,
        required: f64,
    },
    /// The evaluation protocol could not be satisfied.
    Protocol(String),
    /// A pipeline stage failed; `stage` names it.
    Stage { stage: String, source: Box<Error> },
    Io(std::io::Error),
    Json(serde_json::Error),
    Csv(csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Parse { row, message } => write!(f, "parse error at row {row}: {message}"),
            Error::EmptyDataset => write!(f, "dataset is empty"),
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::Degenerate(msg) => write!(f, "degenerate input: {msg}"),
            Error::Solver(msg) => write!(f, "solver error: {msg}"),
            Error::Convergence(msg) => write!(f, "failed to converge: {msg}"),
            Error::NoAdversarialExample => {
                write!(f, "no adversarial example exists (constant classifier)")
            }
            Error::NoCandidateRegion => {
                write!(f, "no candidate region with a different label (raise the budget)")
            }
            Error::SeparationViolation { first, second, distance, required } => write!(
                f,
                "points {first} and {second} are {distance} apart, below the required {required}"
            ),
            Error::Protocol(msg) => write!(f, "protocol error: {msg}"),
            Error::Stage { stage, source } => write!(f, "stage {stage}: {source}"),
            Error::Io(e) => write!(f, "io error: {e}"),
            Error::Json(e) => write!(f, "json error: {e}"),
            Error::Csv(e) => write!(f, "csv error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Stage { source, .. } => Some(source.as_ref()),
            Error::Io(e) => Some(e),
            Error::Json(e) => Some(e),
            Error::Csv(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e)
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e)
    }
}

impl Error {
    /// Wraps an error with the pipeline stage it occurred in.
    pub fn in_stage(self, stage: &str) -> Error {
        Error::Stage { stage: stage.to_string(), source: Box::new(self) }
    }
}
