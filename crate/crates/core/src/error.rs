//! Error taxonomy shared by every module.

use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration (bad mesh size, degenerate bounds, bad key, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// A caller broke an interface contract (length mismatch, bad range).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Input is outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Expression text could not be parsed; `offset` is a byte offset.
    #[error("parse error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },

    /// Expression evaluation produced a nonfinite value or hit an unbound variable.
    #[error("evaluation error: {0}")]
    Eval(String),

    /// A linear system was numerically singular.
    #[error("singular system: {0}")]
    Singular(String),

    /// An iterative solver ran out of iterations.
    #[error("no convergence: {0}")]
    NoConvergence(String),

    /// Newton line search could not make progress.
    #[error("stagnation: {0}")]
    Stagnation(String),

    /// A monotone iteration lost its ordering.
    #[error("monotonicity violated: {0}")]
    Monotonicity(String),

    /// Supersolution certificate failed its nodal validation.
    #[error("certificate error: {0}")]
    Certificate(String),

    /// Fold refinement lost its bracket.
    #[error("fold refinement error: {0}")]
    FoldRefine(String),

    /// Branch start failed.
    #[error("branch start error: {0}")]
    Start(String),

    /// Continuation trace failed before accepting any point.
    #[error("trace error: {0}")]
    Trace(String),

    /// A diagnostic was asked about an input it does not apply to.
    #[error("inapplicable: {0}")]
    Inapplicable(String),

    /// A predicted property of the solution set failed on computed data.
    #[error("verification failure: {0}")]
    Verification(String),

    /// Filesystem problem while writing artifacts.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// JSON serialization problem while writing artifacts.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
