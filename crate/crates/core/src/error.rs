use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("state invariant violated: {0}")]
    InvariantViolation(String),

    #[error("grid resolution error: {0}")]
    Resolution(String),

    #[error("misuse: {0}")]
    Misuse(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("visibility undefined: {0}")]
    UndefinedVisibility(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("config error at line {line}, key `{key}`: {message}")]
    Config {
        line: usize,
        key: String,
        message: String,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short stable name used in diagnostics and by the C API.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::InvariantViolation(_) => "invariant",
            Error::Resolution(_) => "resolution",
            Error::Misuse(_) => "misuse",
            Error::Range(_) => "range",
            Error::UndefinedVisibility(_) => "undefined-visibility",
            Error::Contract(_) => "contract",
            Error::Internal(_) => "internal",
            Error::Config { .. } => "config",
            Error::Io(_) => "io",
        }
    }

    /// True for errors that originate in the physics layer rather than I/O or parsing.
    pub fn is_physics(&self) -> bool {
        !matches!(self, Error::Config { .. } | Error::Io(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
