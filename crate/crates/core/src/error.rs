use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An input violated an operation's preconditions (shape, hermiticity, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A numerical routine was asked for something outside its domain.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unknown state family `{0}`")]
    UnknownFamily(String),

    #[error("parameter {name} = {value} outside the legal range [{lo}, {hi}]")]
    ParamOutOfRange {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A state or decomposition failed one of its type invariants.
    #[error("invariant `{invariant}` violated: {detail}")]
    Invariant {
        invariant: &'static str,
        detail: String,
    },

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
