//! Crate-wide error type.
//!
//! Errors are grouped into three classes that the command-line tool maps to
//! stable exit codes: input/format problems (exit 2), design-consistency
//! problems (exit 3), and statistical-model problems (exit 4).

use thiserror::Error;

/// All errors produced by this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input: unreadable files, bad CSV/JSON, bad flag tokens.
    #[error("input error: {0}")]
    Input(String),

    /// The data contradicts the declared design: missing or duplicated
    /// treatments, unknown symbols or levels, unbalanced tables.
    #[error("design error: {0}")]
    Design(String),

    /// A statistical precondition failed: saturated model, single-class
    /// metric input, constant series, degenerate priors.
    #[error("statistical error: {0}")]
    Stat(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn design(msg: impl Into<String>) -> Self {
        Error::Design(msg.into())
    }

    pub fn stat(msg: impl Into<String>) -> Self {
        Error::Stat(msg.into())
    }

    /// Process exit code for the CLI contract: 2 input, 3 design, 4 statistical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Input(_) | Error::Io(_) => 2,
            Error::Design(_) => 3,
            Error::Stat(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
