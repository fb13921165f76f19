//! Text formats and the benchmark generator.

pub mod benchmark;
pub mod cmt;
pub mod instance_file;
pub mod plan;
pub mod published;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("line {line}: {msg}")]
    At { line: usize, msg: String },
    #[error("{0}")]
    Invalid(String),
}

impl ParseError {
    pub(crate) fn at(line: usize, msg: impl Into<String>) -> Self {
        ParseError::At {
            line,
            msg: msg.into(),
        }
    }
}

/// Parse a finite float, naming the field on failure.
pub(crate) fn number(tok: &str, line: usize, what: &str) -> Result<f64, ParseError> {
    match tok.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(ParseError::at(line, format!("bad {what} `{tok}`"))),
    }
}

pub(crate) fn index(tok: &str, line: usize, what: &str) -> Result<usize, ParseError> {
    tok.parse::<usize>()
        .map_err(|_| ParseError::at(line, format!("bad {what} `{tok}`")))
}
