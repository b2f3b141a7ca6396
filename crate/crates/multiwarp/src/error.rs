//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Evaluation outside the declared domain of a function, or at a point
    /// where a primitive is undefined (negative square root, division by
    /// zero, inverse trig outside [-1, 1], ...).
    #[error("domain error at t = {t}: {reason}")]
    Domain { t: f64, reason: String },

    /// A warping function evaluated to a non-positive value.
    #[error("{context}: value {value} <= 0 at t = {t}")]
    Positivity { t: f64, value: f64, context: String },

    /// A constructor rejected its inputs.
    #[error("validation error: {0}")]
    Validation(String),

    /// A fiber is missing the curvature constant the operation needs.
    #[error("missing fiber data: {0}")]
    MissingData(String),

    /// A reduction hypothesis (zeta != 0, zeta - p_i != 0, ...) failed.
    #[error("degenerate reduction: {0}")]
    Degenerate(String),

    /// The doubly-constrained exponential system needs a positive rate.
    #[error("star system requires nu > 0, got nu = {nu}")]
    StarSystem { nu: f64 },

    /// Root counting did not stabilise when the scan window was enlarged.
    #[error("root bracketing unstable: {0}")]
    Bracket(String),

    /// Classification inputs contradict each other.
    #[error("inconsistent parameters: {0}")]
    InconsistentParameters(String),

    /// The square lapse is not positive on its domain, so F is not invertible.
    #[error("lapse not invertible: {0}")]
    NonInvertible(String),

    /// The coordinate metric could not be inverted at a sample point.
    #[error("singular metric at point {point:?}")]
    SingularMetric { point: Vec<f64> },

    /// Finite-difference step too coarse: Richardson levels disagree.
    #[error("finite-difference step too large: {0}")]
    StepTooLarge(String),

    /// A fiber lacks a model metric, so no coordinate chart can be built.
    #[error("fiber {index} has no model metric")]
    NoModel { index: usize },

    /// Configuration file or CLI arguments are malformed.
    #[error("config error: {0}")]
    Config(String),

    /// Two lists that must have equal length do not.
    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: 2 for configuration problems,
    /// 3 for mathematical domain problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Validation(_) | Error::Io(_) => 2,
            _ => 3,
        }
    }
}
