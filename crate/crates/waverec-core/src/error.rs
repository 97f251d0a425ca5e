//! Error taxonomy shared by every module.
//!
//! Variants are grouped by what the caller can do about them: bad inputs
//! and configuration are caller bugs, admissibility and inconsistency are
//! statements about the data, nonconvergence and trust-region refusals are
//! runtime outcomes a driver may react to (retry, shrink, report partial
//! results).

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong across the forward and inverse pipelines.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Malformed arguments: NaN samples, empty grids, non-increasing
    /// ordinates, negative depth, and similar.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The data or flow violates the no-stagnation condition `u < c`
    /// (equivalently `w < 0`, or monotone stream function on the axis).
    #[error("admissibility violated: {0}")]
    Admissibility(String),

    /// Axis data fails an identity every steady wave must satisfy
    /// (stream-function endpoint values, symmetry beyond tolerance).
    #[error("data inconsistent with a steady wave: {0}")]
    InconsistentData(String),

    /// Too few distinct samples for the requested representation degree.
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    /// Out-of-range knobs: expansion order beyond the supported maximum,
    /// zero-size grids, senseless tolerances.
    #[error("configuration error: {0}")]
    Config(String),

    /// An iteration (Newton, root bracketing) stalled before reaching its
    /// tolerance. Carries the final residual for diagnostics.
    #[error("failed to converge: {context} (residual {residual:e})")]
    Nonconvergence { context: String, residual: f64 },

    /// A solver iterate crossed into `h_p <= 0` (stagnation) and damping
    /// could not rescue it.
    #[error("iterate left the admissible set: {0}")]
    LeavesAdmissibleSet(String),

    /// Series evaluation requested outside the trusted disk.
    #[error("q = {q:e} lies outside the trusted disk |q| <= {q_trust:e}")]
    OutOfTrustedDisk { q: f64, q_trust: f64 },

    /// The truncated series tail is too large to certify the sum; callers
    /// may override per the summation options.
    #[error(
        "series tail indicator {indicator:e} at q = {q:e} exceeds {limit:e}; \
         enable allow_large_tail to accept the value anyway"
    )]
    SeriesTailTooLarge { q: f64, indicator: f64, limit: f64 },

    /// Linear-algebra breakdown (numerically singular system).
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// Stable machine-readable tag for this error class (used by the CLI's
    /// JSON error reports and exit-code mapping).
    pub fn tag(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid_input",
            Error::Admissibility(_) => "admissibility",
            Error::InconsistentData(_) => "inconsistent_data",
            Error::DegenerateFit(_) => "degenerate_fit",
            Error::Config(_) => "config",
            Error::Nonconvergence { .. } => "nonconvergence",
            Error::LeavesAdmissibleSet(_) => "leaves_admissible_set",
            Error::OutOfTrustedDisk { .. } => "out_of_trusted_disk",
            Error::SeriesTailTooLarge { .. } => "series_tail_too_large",
            Error::Numerical(_) => "numerical",
        }
    }
}
