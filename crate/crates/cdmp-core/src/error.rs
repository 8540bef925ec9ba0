use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller violated an input precondition (bad dimension, nonpositive
    /// gain, malformed configuration, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Locally weighted regression could not produce a model.
    #[error("fit failed: {0}")]
    Fit(String),

    /// The forcing term produced a non-finite value; `basis` is the index of
    /// the basis whose activation degenerated.
    #[error("forcing evaluation non-finite at basis {basis} (s = {phase})")]
    NonFiniteForcing { basis: usize, phase: f64 },

    /// Numerical integration left the finite range.
    #[error("integration diverged at t = {time} s")]
    Divergence { time: f64 },

    /// A file could not be parsed; `line` is 1-based.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Vector dimensions do not agree.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// The NLP solver failed outright (non-finite callable, line-search
    /// breakdown, iteration limit without a feasible point).
    #[error("solver failure: {0}")]
    Solver(String),

    /// The NLP is infeasible; carries the most violated constraint.
    #[error("infeasible: most violated constraint is {kind} (violation {violation:.3e})")]
    Infeasible { kind: String, violation: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
