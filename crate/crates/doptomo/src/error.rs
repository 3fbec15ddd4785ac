//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by scene construction, imaging, null synthesis,
/// deblurring, and the shared numerics.
#[derive(Debug, Error)]
pub enum Error {
    /// A value violates a construction-time invariant (negative radius,
    /// zero carrier, empty grid, ...).
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Two inputs that must agree in length or shape do not.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A least-squares system lost column rank and no regularization was
    /// requested.
    #[error("rank-deficient system: {0}")]
    RankDeficient(String),

    /// The null-synthesis Gram matrix is numerically singular. The index
    /// identifies the first requested null whose constraints are linearly
    /// dependent on the others (coincident or degenerate targets).
    #[error("degenerate null set: constraints for null {index} are linearly dependent")]
    DegenerateNulls { index: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
