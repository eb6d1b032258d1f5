use thiserror::Error;

/// Errors raised across the simulator, crypto, protocol and learning layers.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A structural check on user-supplied data failed (e.g. a permutation table is not a bijection).
    #[error("validation error: {0}")]
    Validation(String),

    /// A configuration document failed validation; `path` points at the offending field.
    #[error("invalid config at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("unsupported gate for key update: {0}")]
    UnsupportedGate(String),

    /// A ciphertext was presented to a key that did not issue it.
    #[error("wrong key: ciphertext belongs to vault {found:#018x}, expected {expected:#018x}")]
    WrongKey { expected: u64, found: u64 },

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("transcript error: {0}")]
    Transcript(String),

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("linear solver failed: {0}")]
    Solver(String),

    /// Training cost stayed above ten times its initial value for too long.
    #[error("training diverged at iteration {iteration} (cost {cost:.6e})")]
    Diverged { iteration: usize, cost: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by bad user input rather than a runtime failure.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Config { .. } | Error::Validation(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
