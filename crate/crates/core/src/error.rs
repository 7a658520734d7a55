use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("no base station inside the observation window")]
    NoBaseStation,

    #[error("argument {0} outside the domain of the principal Lambert W branch")]
    Domain(f64),

    #[error("degenerate fading law: {0}")]
    Degenerate(&'static str),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("fixed point did not converge after {iterations} iterations (last residual {last_residual:e})")]
    NoConvergence {
        iterations: usize,
        last_residual: f64,
        residual_trace: Vec<f64>,
    },

    #[error("at t = {t}: {source}")]
    AtTime { t: f64, source: Box<Error> },
}

impl Error {
    /// True for a solver non-convergence, also when wrapped with a time stamp.
    pub fn is_no_convergence(&self) -> bool {
        match self {
            Error::NoConvergence { .. } => true,
            Error::AtTime { source, .. } => source.is_no_convergence(),
            _ => false,
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }
}
