use std::path::PathBuf;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by the library.
///
/// The variants are grouped by how a frontend should report them: bad
/// arguments, bad input files, or numeric/convergence failures at runtime.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A precondition on an argument was violated.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// File could not be read or written.
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A file was readable but not in the expected format.
    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },

    /// An iterative scheme failed to converge within its budget.
    #[error("did not converge: {0}")]
    Convergence(String),

    /// A degree sequence could not be realized as a simple graph.
    #[error("degree sequence not realizable: {0}")]
    Unrealizable(String),

    /// KL divergence requested with q = 0 somewhere p > 0.
    #[error("support violation: {0}")]
    SupportViolation(String),

    /// Exact enumeration requested beyond the configuration-space cap.
    #[error("system too large for exact enumeration: {0}")]
    SizeCap(String),
}
