use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A closed-form expression was evaluated at one of its singular points.
    #[error("singular point: {what} is singular at phi = {phi}")]
    SingularPoint { what: &'static str, phi: f64 },

    /// The discretization cannot represent the requested object.
    #[error("resolution error: {what} (need at least {required}, have {available})")]
    Resolution {
        what: String,
        required: usize,
        available: usize,
    },

    /// A request reaches beyond the truncated spectrum.
    #[error("truncation error: {0}")]
    Truncation(String),

    /// An iterative or quadrature procedure did not converge.
    #[error("convergence failure in {module}: {detail}")]
    Convergence { module: &'static str, detail: String },

    /// Galerkin assembly did not stabilize under quadrature refinement.
    #[error("assembly error: entry ({row}, {col}) changed by {relative_change:.3e} under refinement")]
    Assembly {
        row: usize,
        col: usize,
        relative_change: f64,
    },

    /// Invalid user configuration.
    #[error("config error: {0}")]
    Config(String),

    /// Malformed potential expression.
    #[error("parse error at byte {position}: {message}")]
    Parse { position: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
