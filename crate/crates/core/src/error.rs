use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("edge list contains no edges")]
    EmptyInput,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("power iteration did not converge after {iterations} iterations (last estimate {last_estimate})")]
    NotConverged { iterations: usize, last_estimate: f64 },

    #[error("undefined quantity: {0}")]
    Undefined(String),

    #[error("state invariant violated at t={time} (node {node}): {detail}; try a smaller time step")]
    InvariantViolation {
        time: f64,
        node: usize,
        detail: String,
    },

    #[error("grid mismatch: expected {expected} points, found {found}")]
    GridMismatch { expected: usize, found: usize },

    #[error("control weight for node {node} is {value}, outside [0, 1]")]
    ControlOutOfRange { node: usize, value: f64 },

    #[error("non-finite {what} at iteration {iteration}")]
    NonFinite { iteration: usize, what: &'static str },

    #[error("need at least 2 values, got {0}")]
    TooFewValues(usize),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
