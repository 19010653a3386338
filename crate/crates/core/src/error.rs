//! Error types shared across the crate.

use thiserror::Error;

use crate::geometry::FieldKind;

#[derive(Debug, Error)]
pub enum VortexError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("grid mismatch: field on n={0} combined with grid n={1}")]
    GridMismatch(usize, usize),

    #[error("expected a {expected:?} field, got {got:?}")]
    WrongFieldKind { expected: FieldKind, got: FieldKind },

    #[error("admissibility violation: {0}")]
    Admissibility(String),

    /// The eliminated denominator a + bts - ct^2 s^2 - tks(d - s) lost
    /// positivity somewhere on the grid; the iterate left the regime in
    /// which the pointwise estimates apply.
    #[error("eliminated denominator nonpositive (min {0:.6e})")]
    DenominatorNonpositive(f64),

    #[error(
        "newton did not converge: residual {final_norm:.6e} after {iters} iterations ({detail})"
    )]
    NonConvergence {
        final_norm: f64,
        iters: usize,
        detail: String,
    },

    #[error("continuation failed at (alpha={alpha}, t={t}): {reason}")]
    PathFailure { alpha: f64, t: f64, reason: String },

    #[error("internal cross-check failed: {0}")]
    InternalCheck(String),
}

pub type Result<T> = std::result::Result<T, VortexError>;
