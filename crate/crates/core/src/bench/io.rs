//! Text formats.
//!
//! KMAT: first line `rows cols`, then `rows·cols` whitespace-separated
//! floats in row-major order. Sparse vector: first line `len nnz`, then `nnz`
//! lines `index value` with zero-based indices.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, ParseError, Result};
use crate::linalg::{DenseMatrix, SparseVector};

/// Whitespace-separated tokens with their byte offsets.
struct Tokens<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str, pos: usize) -> Self {
        Self { text, pos }
    }
}

impl<'a> Iterator for Tokens<'a> {
    type Item = (usize, &'a str);

    fn next(&mut self) -> Option<Self::Item> {
        let rest = &self.text[self.pos..];
        let start = self.pos + (rest.len() - rest.trim_start().len());
        if start == self.text.len() {
            self.pos = start;
            return None;
        }
        let tail = &self.text[start..];
        let len = tail.find(char::is_whitespace).unwrap_or(tail.len());
        self.pos = start + len;
        Some((start, &tail[..len]))
    }
}

/// Splits off the first nonblank line, returning its tokens and the byte
/// offset where the body starts.
fn header(text: &str) -> Result<(usize, Vec<(usize, &str)>), ParseError> {
    let start = text.len() - text.trim_start().len();
    if start == text.len() {
        return Err(ParseError::MissingHeader);
    }
    let end = text[start..].find('\n').map_or(text.len(), |i| start + i);
    let tokens = Tokens::new(&text[..end], start).collect();
    Ok((end, tokens))
}

fn header_counts(text: &str, what: [&str; 2]) -> Result<(usize, usize, usize), ParseError> {
    let (body, tokens) = header(text)?;
    let offset = tokens[0].0;
    if tokens.len() != 2 {
        return Err(ParseError::MalformedHeader {
            offset,
            message: format!("expected \"{} {}\", found {} fields", what[0], what[1], tokens.len()),
        });
    }
    let parse = |(off, tok): (usize, &str), name: &str| {
        tok.parse::<usize>().map_err(|_| ParseError::MalformedHeader {
            offset: off,
            message: format!("{name} {tok:?} is not a nonnegative integer"),
        })
    };
    Ok((parse(tokens[0], what[0])?, parse(tokens[1], what[1])?, body))
}

fn parse_float(offset: usize, token: &str) -> Result<f64, ParseError> {
    let v: f64 = token.parse().map_err(|_| ParseError::InvalidNumber {
        offset,
        token: token.to_string(),
    })?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ParseError::NonFinite { offset })
    }
}

pub fn parse_matrix(text: &str) -> Result<DenseMatrix, ParseError> {
    let (rows, cols, body) = header_counts(text, ["rows", "cols"])?;
    let len = rows.checked_mul(cols).ok_or_else(|| ParseError::MalformedHeader {
        offset: 0,
        message: format!("{rows} x {cols} overflows"),
    })?;
    let mut tokens = Tokens::new(text, body);
    let mut data = Vec::with_capacity(len.min(text.len()));
    while data.len() < len {
        match tokens.next() {
            Some((off, tok)) => data.push(parse_float(off, tok)?),
            None => {
                return Err(ParseError::Truncated {
                    offset: text.len(),
                    expected: len,
                    found: data.len(),
                })
            }
        }
    }
    if let Some((offset, _)) = tokens.next() {
        return Err(ParseError::TrailingData { offset });
    }
    Ok(DenseMatrix::new(rows, cols, data).expect("entries validated finite"))
}

/// Shortest round-trip formatting, so `parse_matrix(format_matrix(a)) == a`
/// bit for bit.
pub fn format_matrix(a: &DenseMatrix) -> String {
    let mut out = format!("{} {}\n", a.rows(), a.cols());
    for i in 0..a.rows() {
        let row = a.row(i);
        for (j, v) in row.iter().enumerate() {
            let sep = if j + 1 == row.len() { "\n" } else { " " };
            write!(out, "{v:e}{sep}").unwrap();
        }
    }
    out
}

pub fn parse_sparse_vector(text: &str) -> Result<SparseVector, ParseError> {
    let (len, nnz, body) = header_counts(text, ["len", "nnz"])?;
    let mut tokens = Tokens::new(text, body);
    let mut entries = Vec::with_capacity(nnz.min(text.len()));
    for k in 0..nnz {
        let truncated = || ParseError::Truncated {
            offset: text.len(),
            expected: nnz,
            found: k,
        };
        let (ioff, itok) = tokens.next().ok_or_else(truncated)?;
        let index: usize = itok.parse().map_err(|_| ParseError::InvalidNumber {
            offset: ioff,
            token: itok.to_string(),
        })?;
        if index >= len {
            return Err(ParseError::IndexOutOfRange {
                offset: ioff,
                index,
                len,
            });
        }
        let (voff, vtok) = tokens.next().ok_or_else(truncated)?;
        entries.push((index, parse_float(voff, vtok)?));
    }
    if let Some((offset, _)) = tokens.next() {
        return Err(ParseError::TrailingData { offset });
    }
    Ok(SparseVector::new(len, entries).expect("entries validated"))
}

pub fn format_sparse_vector(v: &SparseVector) -> String {
    let mut out = format!("{} {}\n", v.len(), v.nnz());
    for &(i, x) in v.entries() {
        writeln!(out, "{i} {x:e}").unwrap();
    }
    out
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Reads a KMAT file; parse errors carry byte offsets.
pub fn load_matrix(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    Ok(parse_matrix(&read(path.as_ref())?)?)
}

pub fn save_matrix(path: impl AsRef<Path>, a: &DenseMatrix) -> Result<()> {
    write(path.as_ref(), &format_matrix(a))
}

pub fn load_sparse_vector(path: impl AsRef<Path>) -> Result<SparseVector> {
    Ok(parse_sparse_vector(&read(path.as_ref())?)?)
}

pub fn save_sparse_vector(path: impl AsRef<Path>, v: &SparseVector) -> Result<()> {
    write(path.as_ref(), &format_sparse_vector(v))
}
