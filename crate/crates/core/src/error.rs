//! Crate-wide error type.

use alloc::string::String;

/// Errors reported by validation and iterative routines.
///
/// Shape and value checks happen at construction boundaries, so the
/// numeric kernels themselves can assume well-formed inputs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Error {
    /// Incompatible or out-of-range dimensions (template larger than
    /// background, mismatched matrix shapes, assignment out of bounds).
    Dimension(String),
    /// A value outside its documented domain (probability, correlation,
    /// penalty, non-symmetric adjacency, non-binary entry, ...).
    Input(String),
    /// A combination of options that is deliberately not implemented,
    /// e.g. centered padding of weighted graphs.
    Unsupported(String),
    /// An iterative normalization failed to reach tolerance.
    Convergence(String),
}

impl core::fmt::Display for Error {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Error::Dimension(msg) => write!(f, "dimension error: {msg}"),
            Error::Input(msg) => write!(f, "invalid input: {msg}"),
            Error::Unsupported(msg) => write!(f, "unsupported: {msg}"),
            Error::Convergence(msg) => write!(f, "failed to converge: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
