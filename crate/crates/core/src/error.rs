use thiserror::Error;

/// Errors raised by the numerical kernels and the link-level models.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Adaptive quadrature ran out of its evaluation budget.
    #[error("quadrature did not converge after {evaluations} evaluations (estimate {estimate:e}, error {abs_error:e})")]
    Convergence {
        estimate: f64,
        abs_error: f64,
        evaluations: usize,
    },

    /// A simulation or network configuration is inconsistent.
    #[error("configuration error: {0}")]
    Config(String),

    /// An asymptotic formula was evaluated outside the regime where it holds.
    #[error("out of regime: {0}")]
    OutOfRegime(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
