use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter lies outside the natural or mean domain of the family.
    #[error("domain error: {0}")]
    Domain(String),

    /// An observation lies outside the support of the family.
    #[error("support error: {0}")]
    Support(String),

    #[error("no sign change on bracket [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("{what} did not converge (estimate {estimate:e}, error {error:e}, {evaluations} evaluations)")]
    NonConvergence {
        what: String,
        estimate: f64,
        error: f64,
        evaluations: usize,
    },

    #[error("integral over an unbounded domain does not converge: {0}")]
    NonIntegrable(String),

    /// The CNML denominator diverges for this prefix.
    #[error("predictive distribution cannot be normalized: {0}")]
    NonNormalizable(String),

    #[error("posterior is improper: {0}")]
    ImproperPosterior(String),

    /// Every observation sits on the boundary of the mean domain (e.g. all
    /// Poisson-exponential observations hit the atom at zero).
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn support(msg: impl Into<String>) -> Self {
        Error::Support(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for failures of an iterative numerical method rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. }
                | Error::NonIntegrable(_)
                | Error::NoSignChange { .. }
                | Error::NonNormalizable(_)
                | Error::ImproperPosterior(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
