use thiserror::Error;

use crate::spec::SpecError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid action: {0}")]
    InvalidAction(String),

    #[error("invalid action for batch entry {index}: {source}")]
    InvalidBatchAction {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("environment `{id}` not found{}", suggestion_suffix(.suggestions))]
    NotFound { id: String, suggestions: Vec<String> },

    #[error("environment `{0}` is already registered")]
    Conflict(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Spec(#[from] SpecError),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

fn suggestion_suffix(suggestions: &[String]) -> String {
    if suggestions.is_empty() {
        String::new()
    } else {
        format!("; did you mean {}?", suggestions.join(", "))
    }
}

impl Error {
    pub(crate) fn invalid_action(msg: impl Into<String>) -> Self {
        Error::InvalidAction(msg.into())
    }

    pub(crate) fn invalid_arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
