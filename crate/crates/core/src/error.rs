use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("matrix is not primitive: no power up to {bound} is strictly positive")]
    NotPrimitive { bound: usize },

    #[error(
        "power iteration did not converge after {iterations} iterations \
         (last rho estimate {rho}, last change {change:e})"
    )]
    NonConvergence {
        iterations: usize,
        rho: f64,
        change: f64,
        u: Vec<f64>,
        v: Vec<f64>,
    },

    #[error("Perron root {rho} differs from 1 by more than {tol:e}")]
    NotCritical { rho: f64, tol: f64 },

    #[error("invalid offspring law: {0}")]
    InvalidLaw(String),

    #[error("invalid model configuration at state {state:?}: {reason}")]
    ModelConfig { state: Vec<f64>, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate variance: sigma^2(rv) = 0 at r = {r}")]
    DegenerateVariance { r: f64 },

    #[error("population overflow at state {state:?}")]
    Overflow { state: Vec<f64> },

    #[error("configuration error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit code: 1 for configuration/domain problems, 2 for
    /// computational failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NonConvergence { .. }
            | Error::NotCritical { .. }
            | Error::DegenerateVariance { .. }
            | Error::Overflow { .. } => 2,
            _ => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidMatrix(_) => "invalid_matrix",
            Error::NotPrimitive { .. } => "not_primitive",
            Error::NonConvergence { .. } => "non_convergence",
            Error::NotCritical { .. } => "not_critical",
            Error::InvalidLaw(_) => "invalid_law",
            Error::ModelConfig { .. } => "model_config",
            Error::Domain(_) => "domain",
            Error::DegenerateVariance { .. } => "degenerate_variance",
            Error::Overflow { .. } => "overflow",
            Error::Config { .. } => "config",
            Error::Io { .. } => "io",
        }
    }

    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}
