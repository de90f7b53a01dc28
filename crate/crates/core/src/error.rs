use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An iterative or adaptive method gave up. `partial` carries the best
    /// estimate available at that point, when one exists.
    #[error("numerical failure: {message}")]
    NumericalFailure {
        message: String,
        partial: Option<f64>,
    },

    #[error("certificate failure: {0}")]
    CertificateFailure(String),

    #[error("not implemented: {0}")]
    NotImplemented(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn numerical(msg: impl Into<String>, partial: Option<f64>) -> Self {
        Error::NumericalFailure {
            message: msg.into(),
            partial,
        }
    }

    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidArgument(_) => 2,
            Error::NumericalFailure { .. } | Error::CertificateFailure(_) | Error::InvalidState(_) => 3,
            Error::NotImplemented(_) => 2,
            Error::Io(_) | Error::Serde(_) => 1,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Serde(e.to_string())
    }
}
