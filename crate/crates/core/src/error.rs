use std::io;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Arguments that violate an operation's preconditions.
    #[error("invalid input: {0}")]
    Input(String),
    /// A size budget (points, cells, lattice enumeration) would be exceeded.
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    /// A numerical routine failed to reach its tolerance.
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn resource(msg: impl Into<String>) -> Self {
        Error::Resource(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    /// Short machine-readable tag used in CLI error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Input(_) | Error::Parse(_) => "input",
            Error::Resource(_) => "resource",
            Error::Numeric(_) => "numeric",
            Error::Io(_) => "io",
        }
    }
}
