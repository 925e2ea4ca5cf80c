use thiserror::Error;

use crate::instance::ValidationReport;

#[derive(Debug, Error)]
pub enum Error {
    #[error("instance failed validation:\n{0}")]
    Invalid(ValidationReport),
    #[error("fleet must contain at least one truck")]
    EmptyFleet,
    #[error("node {0} cannot reach node {1}")]
    Disconnected(u32, u32),
    #[error("unknown product {0}")]
    UnknownProduct(u32),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("window needs at least two multiplier vectors, got {0}")]
    ShortWindow(usize),
    #[error("malformed solution: {0}")]
    MalformedSolution(String),
    #[error("missing entry: {0}")]
    Missing(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
