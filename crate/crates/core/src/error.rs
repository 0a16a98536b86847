use thiserror::Error;

/// Errors produced while parsing inputs or driving a partitioned run.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("edge references unknown vertex {vid} at line {line}")]
    UnknownVertex { line: usize, vid: u32 },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("bookkeeping violation: {0}")]
    Bookkeeping(String),

    #[error("infeasible parameters: {0}")]
    Infeasible(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
