//! LIBSVM text format.
//!
//! ```text
//! +1 1:0.5 3:-2
//! -1 2:1
//! ```
//!
//! File indices are 1-based and strictly increasing within a line; they are
//! stored 0-based. Anything after `#` on a line is ignored.

use std::io::{self, BufRead, Write};

use thiserror::Error;

use super::{Dataset, Example, TaskKind};
use crate::linalg::SparseVector;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("i/o error: {0}")]
    Io(String),
    #[error("file contains no examples")]
    Empty,
    #[error("cannot parse label {0:?}")]
    Label(String),
    #[error("feature token {0:?} is not of the form idx:val")]
    Token(String),
    #[error("cannot parse feature index {0:?}")]
    Index(String),
    #[error("feature index 0 is invalid (indices are 1-based)")]
    ZeroIndex,
    #[error("feature index {index} does not follow {previous} (indices must be strictly increasing)")]
    NonIncreasing { previous: usize, index: usize },
    #[error("cannot parse feature value {0:?}")]
    Value(String),
    #[error("non-finite number {0:?}")]
    NonFinite(String),
    #[error("feature index {index} exceeds the dimension override {dim}")]
    ExceedsDim { index: usize, dim: usize },
}

/// A parse failure. `line` is 1-based; 0 means the error is not tied to a line.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

impl ParseError {
    fn at(line: usize, kind: ParseErrorKind) -> Self {
        Self { line, kind }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ParseOptions {
    pub task: TaskKind,
    /// Ambient dimension. When `None` the largest index seen is used.
    pub dim: Option<usize>,
    pub name: String,
}

impl ParseOptions {
    pub fn classification(name: impl Into<String>) -> Self {
        Self {
            task: TaskKind::Classification,
            dim: None,
            name: name.into(),
        }
    }

    pub fn regression(name: impl Into<String>) -> Self {
        Self {
            task: TaskKind::Regression,
            dim: None,
            name: name.into(),
        }
    }

    pub fn with_dim(mut self, dim: usize) -> Self {
        self.dim = Some(dim);
        self
    }
}

fn parse_number(token: &str, line: usize, kind: fn(String) -> ParseErrorKind) -> Result<f64, ParseError> {
    let v: f64 = token
        .parse()
        .map_err(|_| ParseError::at(line, kind(token.to_string())))?;
    if !v.is_finite() {
        return Err(ParseError::at(line, ParseErrorKind::NonFinite(token.to_string())));
    }
    Ok(v)
}

/// Parses a LIBSVM stream. Classification labels are coerced to `+1` when
/// positive and `-1` otherwise.
pub fn parse_libsvm<T: Real, R: BufRead>(reader: R, opts: &ParseOptions) -> Result<Dataset<T>, ParseError> {
    let mut rows: Vec<(T, Vec<usize>, Vec<T>)> = Vec::new();
    let mut max_index = 0usize;

    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| ParseError::at(lineno, ParseErrorKind::Io(e.to_string())))?;
        let content = line.split('#').next().unwrap_or("");
        let mut tokens = content.split_whitespace();
        let Some(label_tok) = tokens.next() else {
            continue;
        };
        let raw_label = parse_number(label_tok, lineno, ParseErrorKind::Label)?;
        let label = match opts.task {
            TaskKind::Classification if raw_label > 0.0 => 1.0,
            TaskKind::Classification => -1.0,
            TaskKind::Regression => raw_label,
        };

        let mut indices = Vec::new();
        let mut values = Vec::new();
        for tok in tokens {
            let (idx_s, val_s) = tok
                .split_once(':')
                .ok_or_else(|| ParseError::at(lineno, ParseErrorKind::Token(tok.to_string())))?;
            let idx: usize = idx_s
                .parse()
                .map_err(|_| ParseError::at(lineno, ParseErrorKind::Index(idx_s.to_string())))?;
            if idx == 0 {
                return Err(ParseError::at(lineno, ParseErrorKind::ZeroIndex));
            }
            if let Some(&prev) = indices.last() {
                if idx - 1 <= prev {
                    return Err(ParseError::at(
                        lineno,
                        ParseErrorKind::NonIncreasing {
                            previous: prev + 1,
                            index: idx,
                        },
                    ));
                }
            }
            if let Some(dim) = opts.dim {
                if idx > dim {
                    return Err(ParseError::at(lineno, ParseErrorKind::ExceedsDim { index: idx, dim }));
                }
            }
            let val = parse_number(val_s, lineno, ParseErrorKind::Value)?;
            max_index = max_index.max(idx);
            indices.push(idx - 1);
            values.push(T::lit(val));
        }
        rows.push((T::lit(label), indices, values));
    }

    if rows.is_empty() {
        return Err(ParseError::at(0, ParseErrorKind::Empty));
    }
    let dim = opts.dim.unwrap_or(max_index);
    let examples = rows
        .into_iter()
        .map(|(label, indices, values)| Example {
            // indices were validated above
            features: SparseVector::from_sorted(dim, indices, values).expect("validated row"),
            label,
        })
        .collect();
    Ok(Dataset::new(opts.name.clone(), dim, examples).expect("non-empty, consistent dimension"))
}

/// Writes `ds` in LIBSVM format. Numbers use the shortest representation
/// that parses back to the same value.
pub fn write_libsvm<T: Real, W: Write>(ds: &Dataset<T>, mut out: W) -> io::Result<()> {
    for ex in ds.examples() {
        write!(out, "{}", ex.label)?;
        for (i, v) in ex.features.iter() {
            write!(out, " {}:{}", i + 1, v)?;
        }
        writeln!(out)?;
    }
    Ok(())
}
