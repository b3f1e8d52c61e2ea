use std::path::PathBuf;

/// Errors raised anywhere in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("self-loop ({node}, {node}) at {location}")]
    SelfLoop { node: usize, location: String },

    #[error("index {index} out of range for {what} of size {size}")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        size: usize,
    },

    #[error("negative weight {value} at {location}")]
    NegativeWeight { value: f64, location: String },

    #[error("non-finite value at {location}")]
    NonFinite { location: String },

    #[error("dimension mismatch for {what}: expected {expected}, got {actual}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("slot ({0}, {1}) is governed more than once")]
    DuplicateSlot(usize, usize),

    #[error("linear solve did not converge after {iterations} iterations (relative residual {residual:e})")]
    SolverDidNotConverge { iterations: usize, residual: f64 },

    #[error("projection did not converge after {iterations} sweeps (worst violation {worst_violation:e})")]
    ProjectionDidNotConverge {
        iterations: usize,
        worst_violation: f64,
    },

    #[error("feasible set appears empty: {0}")]
    Infeasible(String),

    #[error("objective `{name}` failed its gradient check (relative error {error:e})")]
    GradientCheck { name: String, error: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
