use thiserror::Error;

pub type Result<T> = std::result::Result<T, EsnError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EsnError {
    /// Argument outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An improper integral or function value was certified divergent.
    #[error("divergent: {0}")]
    Divergent(String),

    /// Divergence could not be decided (no declared endpoint exponent).
    #[error("inconclusive divergence: {0}")]
    InconclusiveDivergence(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// Simulation hit its event or atom budget.
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("quadrature failed: {what} (error estimate {abs_err:e})")]
    Quadrature { what: String, abs_err: f64 },

    #[error("no stationary law: {0}")]
    NoStationaryLaw(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl EsnError {
    /// True for errors caused by numerics rather than by bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            EsnError::Divergent(_)
                | EsnError::InconclusiveDivergence(_)
                | EsnError::Quadrature { .. }
                | EsnError::BudgetExceeded(_)
        )
    }
}

impl From<std::io::Error> for EsnError {
    fn from(e: std::io::Error) -> Self {
        EsnError::Io(e.to_string())
    }
}
