//! Plain-text triple files.
//!
//! ```text
//! # optional comments
//! m n
//! <m lines of n reals: rows of A>
//! <m reals: b>
//! <n reals: c>
//! ```

use lp_kappa::DataTriple;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message}, line {line}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        line,
        message: message.into(),
    }
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    /// Next non-blank, non-comment line with its 1-based number.
    fn next_content(&mut self) -> Option<(usize, &'a str)> {
        for (i, raw) in self.inner.by_ref() {
            self.last = i + 1;
            let t = raw.trim();
            if !t.is_empty() && !t.starts_with('#') {
                return Some((i + 1, t));
            }
        }
        None
    }

    fn reals(&mut self, count: usize, what: &str) -> Result<Vec<f64>, ParseError> {
        let Some((line, text)) = self.next_content() else {
            return Err(err(
                self.last + 1,
                format!("missing line: expected {count} values for {what}"),
            ));
        };
        let tokens: Vec<&str> = text.split_whitespace().collect();
        if tokens.len() != count {
            return Err(err(line, format!("expected {count} values for {what}")));
        }
        tokens
            .iter()
            .map(|tok| match tok.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                Ok(_) => Err(err(line, format!("non-finite value '{tok}' in {what}"))),
                Err(_) => Err(err(line, format!("invalid number '{tok}' in {what}"))),
            })
            .collect()
    }
}

pub fn parse_triple_file(text: &str) -> Result<DataTriple, ParseError> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        last: 0,
    };
    let Some((hline, header)) = lines.next_content() else {
        return Err(err(lines.last + 1, "missing header 'm n'"));
    };
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| err(hline, format!("invalid header '{header}', expected 'm n'")))?;
    let &[m, n] = dims.as_slice() else {
        return Err(err(
            hline,
            format!("invalid header '{header}', expected 'm n'"),
        ));
    };
    if m == 0 || m > n {
        return Err(err(
            hline,
            format!("dimensions must satisfy 1 <= m <= n, got m = {m}, n = {n}"),
        ));
    }

    let mut a = Vec::with_capacity(m * n);
    for i in 0..m {
        a.extend(lines.reals(n, &format!("row {} of A", i + 1))?);
    }
    let b = lines.reals(m, "b")?;
    let c = lines.reals(n, "c")?;
    if let Some((line, _)) = lines.next_content() {
        return Err(err(line, "unexpected content after c"));
    }
    DataTriple::new(m, n, a, b, c).map_err(|e| err(hline, e.to_string()))
}
