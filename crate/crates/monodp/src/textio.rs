//! Shared helpers for the whitespace-separated instance and trace formats:
//! one record per line, `#` starts a comment.

use std::fmt;
use std::str::FromStr;

#[derive(Clone, Debug)]
pub struct ParseError {
    pub line: usize,
    pub msg: String,
}

impl ParseError {
    pub fn new(line: usize, msg: impl Into<String>) -> ParseError {
        ParseError {
            line,
            msg: msg.into(),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.msg)
    }
}

impl std::error::Error for ParseError {}

/// Non-empty, comment-stripped lines with their 1-based line numbers.
pub fn records(text: &str) -> Vec<(usize, Vec<&str>)> {
    text.lines()
        .enumerate()
        .filter_map(|(i, line)| {
            let body = line.split('#').next().unwrap_or("");
            let fields: Vec<&str> = body.split_whitespace().collect();
            if fields.is_empty() {
                None
            } else {
                Some((i + 1, fields))
            }
        })
        .collect()
}

pub fn field<T: FromStr>(
    fields: &[&str],
    idx: usize,
    line: usize,
    what: &str,
) -> Result<T, ParseError> {
    let raw = fields
        .get(idx)
        .ok_or_else(|| ParseError::new(line, format!("missing {what}")))?;
    raw.parse()
        .map_err(|_| ParseError::new(line, format!("invalid {what}: {raw}")))
}
