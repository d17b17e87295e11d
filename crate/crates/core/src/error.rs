use thiserror::Error;

/// Errors raised by the solvers and constructors in this crate.
///
/// Each variant corresponds to one failure family so front-ends can map them
/// onto stable exit codes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("consistency violation: {0}")]
    Consistency(String),

    #[error("capacity guard: {what} needs {required} entries, limit is {limit}")]
    Capacity {
        what: &'static str,
        required: u128,
        limit: u128,
    },

    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    IterationLimit { iterations: usize, residual: f64 },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("parameter out of range: {0}")]
    Parameter(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}
