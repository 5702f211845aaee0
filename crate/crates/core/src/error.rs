use thiserror::Error;

/// Errors produced anywhere in the solver pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("moment diverges: {0}")]
    MomentDiverges(String),

    /// The Fourier term budget ran out before the target accuracy was reached.
    #[error("term budget exceeded: {terms} terms reached error {achieved:.3e}, target {target:.3e}")]
    TermBudgetExceeded { terms: usize, achieved: f64, target: f64 },

    #[error("decomposition window did not converge after {iterations} iterations")]
    WindowNotConverged { iterations: usize },

    #[error("state budget exceeded: more than {cap} dynamic-programming states")]
    StateBudgetExceeded { cap: usize },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("too many spanning trees: {count} exceeds cap {cap}")]
    TooManyTrees { count: u128, cap: u128 },

    #[error("oracle cap exceeded: more than {cap} feasible solutions")]
    TooManySolutions { cap: usize },

    #[error("support explosion: law with {size} atoms exceeds cap {cap}")]
    SupportExplosion { size: usize, cap: usize },

    #[error("configuration encoding overflows 128 bits")]
    EncodingOverflow,
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for errors that signal a resource budget rather than bad input.
    pub fn is_budget(&self) -> bool {
        matches!(
            self,
            Error::TermBudgetExceeded { .. }
                | Error::WindowNotConverged { .. }
                | Error::StateBudgetExceeded { .. }
                | Error::TooManyTrees { .. }
                | Error::TooManySolutions { .. }
                | Error::SupportExplosion { .. }
                | Error::EncodingOverflow
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
