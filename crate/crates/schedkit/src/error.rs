//! Error type shared by every fallible operation in the crate.

use thiserror::Error;

/// Everything that can go wrong across schedule construction, weight
/// recovery, refinement, bound evaluation, and the data loaders.
#[derive(Debug, Error)]
pub enum Error {
    /// A schedule or weight sequence whose total mass is zero (or whose
    /// length is zero) cannot be normalized or converted.
    #[error("degenerate horizon: {0}")]
    DegenerateHorizon(String),

    /// Recovering weights from a schedule needs working precision that
    /// grows linearly with the horizon; the caller asked for less.
    #[error("insufficient precision for horizon {horizon}: need at least {needed} bits, got {got}")]
    InsufficientPrecision {
        horizon: usize,
        needed: u32,
        got: u32,
    },

    /// An input value is outside the domain of the requested operation.
    #[error("{0}")]
    Domain(String),

    /// Gradient-norm refinement saw a filtered norm of zero and was not
    /// configured to clamp it.
    #[error(
        "filtered gradient norm is zero at step {step}; inverse weighting is undefined. \
         Use a clamping policy or fall back to a linear decay schedule"
    )]
    DegenerateNorms { step: usize },

    /// A schedule suffix sums to zero where a positive suffix is required.
    #[error("zero suffix sum at step {step}")]
    ZeroSuffix { step: usize },

    /// Two sequences that must be step-aligned have different lengths.
    #[error("length mismatch: {left} vs {right} ({context})")]
    LengthMismatch {
        left: usize,
        right: usize,
        context: &'static str,
    },

    /// A text input (CSV, JSONL, LIBSVM) failed to parse.
    #[error("{message} at line {line}")]
    Parse { line: usize, message: String },

    /// An optimizer run produced a non-finite loss or iterate.
    #[error("run diverged: non-finite value at step {step}")]
    Diverged { step: usize },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
