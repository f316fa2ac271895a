use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// Adaptive quadrature ran out of subdivisions before reaching the
    /// requested tolerance. Carries the best estimate it had.
    #[error(
        "quadrature tolerance not met after {intervals} intervals: \
         estimate {estimate:e}, error bound {error_bound:e}"
    )]
    ToleranceNotMet {
        estimate: f64,
        error_bound: f64,
        intervals: usize,
    },

    /// The printed closed form and the moment assembly of a bound function
    /// disagree somewhere they are expected to coincide.
    #[error("inconsistent evaluation of {what}: printed {printed:e}, assembled {assembled:e}")]
    Inconsistency {
        what: String,
        printed: f64,
        assembled: f64,
    },

    #[error("internal error: {0}")]
    Internal(String),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
