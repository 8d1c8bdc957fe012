use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The instance carries no value to work with (all-zero expectations,
    /// zero anchoring point, ...).
    #[error("degenerate instance: {0}")]
    DegenerateInstance(String),

    /// An enumeration or LP would exceed its configured cap. `count` is a float
    /// because the raw counts overflow 64 bits for modest inputs.
    #[error("instance too large: {what} = {count} exceeds cap {cap}")]
    TooLarge { what: String, count: f64, cap: f64 },

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn too_large(what: impl Into<String>, count: f64, cap: f64) -> Self {
        Error::TooLarge {
            what: what.into(),
            count,
            cap,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Malformed(err.to_string())
    }
}
