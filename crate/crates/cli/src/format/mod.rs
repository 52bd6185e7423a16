//! Line-oriented text formats. Every parser reports 1-based line numbers;
//! every renderer produces text its parser reads back to an equal value.

pub mod env;
pub mod game;
pub mod kbp;
pub mod profile;
pub mod qbf;

pub use env::{parse_env, render_env};
pub use game::{parse_game, render_game};
pub use kbp::{parse_program, render_program};
pub use profile::{parse_profile, render_profile};
pub use qbf::parse_qbf;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {msg}")]
pub struct FormatError {
    pub line: usize,
    pub msg: String,
}

impl FormatError {
    pub fn new(line: usize, msg: impl Into<String>) -> Self {
        FormatError { line, msg: msg.into() }
    }
}

/// Non-blank lines with `#` comments removed, numbered from 1.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(k, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        (!line.is_empty()).then_some((k + 1, line))
    })
}

/// Splits `lhs -> rhs` at the last arrow.
pub(crate) fn split_arrow(line: usize, text: &str) -> Result<(&str, &str), FormatError> {
    text.rsplit_once("->")
        .map(|(a, b)| (a.trim(), b.trim()))
        .ok_or_else(|| FormatError::new(line, "expected `->`"))
}
