use thiserror::Error;

/// Errors produced by the core library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        got: usize,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("training aborted: non-finite loss at iteration {iteration}")]
    NonFiniteLoss { iteration: usize },

    #[error("sampler aborted: non-finite {what} at theta={theta:?}, x={x:?}")]
    SamplerAbort {
        what: String,
        theta: Vec<f64>,
        x: Vec<f64>,
    },

    #[error("simulator '{simulator}' failed after {attempts} attempts at theta={theta:?}")]
    SimulatorFailure {
        simulator: String,
        theta: Vec<f64>,
        attempts: usize,
    },

    #[error("unknown simulator '{0}'")]
    UnknownSimulator(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn dim(context: impl Into<String>, expected: usize, got: usize) -> Self {
        Error::DimensionMismatch {
            context: context.into(),
            expected,
            got,
        }
    }
}
