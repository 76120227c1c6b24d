use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("token {0} is neither structural nor part of the symbol split")]
    UnknownSymbol(i32),

    #[error("rule symbol {0} has no binding in the substitution")]
    MissingBinding(u32),

    #[error("generation failed: {0}")]
    Generation(String),

    #[error("task {task} cannot be encoded from a {input} input")]
    TaskMismatch { task: String, input: &'static str },

    #[error("parse error in {part} at token {offset}: {message}")]
    Parse {
        part: &'static str,
        offset: usize,
        message: String,
    },

    #[error("span [{start}, {end}) contains no string symbol")]
    InvalidSpan { start: usize, end: usize },

    #[error("span [{start}, {end}) does not match the rule's left-hand side")]
    SpanMismatch { start: usize, end: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(part: &'static str, offset: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            part,
            offset,
            message: message.into(),
        }
    }

    pub(crate) fn config(message: impl Into<String>) -> Self {
        Error::Config(message.into())
    }
}
