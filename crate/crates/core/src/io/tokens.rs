use std::str::FromStr;

use crate::error::{Error, Result};

pub(crate) fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Whitespace-separated tokens with the 1-based line each came from.
pub(crate) struct Tokens<'a> {
    items: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Tokens<'a> {
    pub(crate) fn new(text: &'a str) -> Self {
        let items = text
            .lines()
            .enumerate()
            .flat_map(|(i, l)| l.split_whitespace().map(move |t| (i + 1, t)))
            .collect();
        Self { items, pos: 0 }
    }

    /// Line of the next token, or of the last one at end of input.
    pub(crate) fn line(&self) -> usize {
        self.items
            .get(self.pos)
            .or_else(|| self.items.last())
            .map_or(1, |&(l, _)| l)
    }

    pub(crate) fn next_str(&mut self, what: &str) -> Result<(usize, &'a str)> {
        let item = self
            .items
            .get(self.pos)
            .copied()
            .ok_or_else(|| parse_error(self.line(), format!("unexpected end of input, expected {what}")))?;
        self.pos += 1;
        Ok(item)
    }

    pub(crate) fn next<T: FromStr>(&mut self, what: &str) -> Result<T> {
        let (line, tok) = self.next_str(what)?;
        parse_token(line, tok, what)
    }

    pub(crate) fn is_empty(&self) -> bool {
        self.pos >= self.items.len()
    }
}

pub(crate) fn parse_token<T: FromStr>(line: usize, tok: &str, what: &str) -> Result<T> {
    tok.parse()
        .map_err(|_| parse_error(line, format!("malformed {what} {tok:?}")))
}
