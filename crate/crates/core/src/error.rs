use thiserror::Error;

/// Errors produced by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Jet operands of different truncation order.
    #[error("jet order mismatch: {0} vs {1}")]
    OrderMismatch(usize, usize),

    /// An adaptive procedure ran out of budget before meeting its tolerance.
    /// Carries the best estimate available at that point.
    #[error("no convergence after {evaluations} evaluations: estimate {estimate:e}, error {error:e}")]
    NonConvergence {
        estimate: f64,
        error: f64,
        evaluations: usize,
    },

    /// Malformed user input (model strings, geometry files, configs).
    #[error("invalid input: {0}")]
    Input(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
