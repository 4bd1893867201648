//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by scenario construction, bound evaluation, the power
/// allocator, and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid simulation parameters or an impossible configuration
    /// (e.g. every AP would become a sensing receiver).
    #[error("configuration error: {0}")]
    Config(String),

    /// Coincident points or zero distances that make a path undefined.
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    /// Out-of-range index or dimension mismatch in a numeric routine.
    #[error("argument error: {0}")]
    Argument(String),

    /// A brute-force oracle was requested on a grid too large to enumerate.
    #[error("resource limit: {0}")]
    ResourceLimit(String),

    /// Malformed config document; carries the 1-based line number.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// I/O failure with the path that caused it.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
