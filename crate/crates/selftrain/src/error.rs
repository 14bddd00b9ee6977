//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an operation's arguments was violated.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A CSV row could not be parsed. `row` is 1-based and counts every
    /// line of the file, including a skipped header.
    #[error("parse error at row {row}: {msg}")]
    Parse { row: usize, msg: String },

    /// A sampler's rejection loop ran long enough that the acceptance
    /// probability is below a usable floor.
    #[error("degenerate parameters: {0}")]
    DegenerateParameters(String),

    /// A score was requested at a point with no labeled neighbor inside
    /// the bandwidth; callers must filter candidates first.
    #[error("no labeled neighbors within bandwidth")]
    NoNeighbors,

    /// A region predicate matched none of the probe points.
    #[error("empty region: {0}")]
    EmptyRegion(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
