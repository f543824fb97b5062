//! Line-oriented update streams.
//!
//! ```text
//! # comment
//! U 2 delta.kmat     add delta.kmat to factor 2 (one-based)
//! Q                  run the configured query
//! B label_delta.vec  add a sparse delta to the label
//! ```
//! Relative paths resolve against the stream file's directory.

use std::path::{Path, PathBuf};

use super::io::{load_matrix, load_sparse_vector};
use crate::error::{Error, ParseError, Result};
use crate::linalg::{DenseMatrix, SparseVector};

#[derive(Debug, Clone, PartialEq)]
pub enum StreamLine {
    /// Zero-based factor index.
    Update {
        factor: usize,
        path: PathBuf,
    },
    Query,
    Label {
        path: PathBuf,
    },
}

/// A stream event with its payload loaded.
#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    Update { factor: usize, delta: DenseMatrix },
    Query,
    Label(SparseVector),
}

pub fn parse_stream(text: &str, base: &Path) -> Result<Vec<StreamLine>, ParseError> {
    let mut out = Vec::new();
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let start = offset;
        offset += line.len();
        let content = line.split('#').next().unwrap_or("");
        let fields: Vec<&str> = content.split_whitespace().collect();
        let bad = |message: String| ParseError::InvalidRecord { offset: start, message };
        let resolve = |p: &str| {
            let p = Path::new(p);
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base.join(p)
            }
        };
        match fields.as_slice() {
            [] => {}
            ["Q"] => out.push(StreamLine::Query),
            ["U", idx, path] => {
                let k: usize = idx
                    .parse()
                    .ok()
                    .filter(|&k| k >= 1)
                    .ok_or_else(|| bad(format!("factor index {idx:?} is not a positive integer")))?;
                out.push(StreamLine::Update {
                    factor: k - 1,
                    path: resolve(path),
                });
            }
            ["B", path] => out.push(StreamLine::Label { path: resolve(path) }),
            _ => {
                return Err(bad(format!(
                    "expected \"U <factor> <path>\", \"Q\" or \"B <path>\", found {:?}",
                    content.trim()
                )))
            }
        }
    }
    Ok(out)
}

pub fn load_stream(path: impl AsRef<Path>) -> Result<Vec<Event>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_stream(&text, base)?
        .into_iter()
        .map(|line| {
            Ok(match line {
                StreamLine::Update { factor, path } => Event::Update {
                    factor,
                    delta: load_matrix(&path)?,
                },
                StreamLine::Query => Event::Query,
                StreamLine::Label { path } => Event::Label(load_sparse_vector(&path)?),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_line_kinds() {
        let text = "# header\nU 2 b.kmat\n\nQ  # query\nB /abs/d.vec\n";
        let lines = parse_stream(text, Path::new("/data")).unwrap();
        assert_eq!(
            lines,
            vec![
                StreamLine::Update {
                    factor: 1,
                    path: PathBuf::from("/data/b.kmat")
                },
                StreamLine::Query,
                StreamLine::Label {
                    path: PathBuf::from("/abs/d.vec")
                },
            ]
        );
        assert!(parse_stream("", Path::new(".")).unwrap().is_empty());
    }

    #[test]
    fn malformed_lines_report_offsets() {
        let err = parse_stream("Q\nU 0 b.kmat\n", Path::new(".")).unwrap_err();
        assert!(matches!(err, ParseError::InvalidRecord { offset: 2, .. }));
        let err = parse_stream("Q\nQ\nX\n", Path::new(".")).unwrap_err();
        assert!(matches!(err, ParseError::InvalidRecord { offset: 4, .. }));
        assert!(parse_stream("U 1\n", Path::new(".")).is_err());
    }

    #[test]
    fn loads_payloads_relative_to_stream() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("b.kmat"), "1 2\n1 2\n").unwrap();
        std::fs::write(dir.path().join("d.vec"), "4 1\n2 0.5\n").unwrap();
        std::fs::write(dir.path().join("s.txt"), "U 1 b.kmat\nB d.vec\nQ\n").unwrap();
        let events = load_stream(dir.path().join("s.txt")).unwrap();
        assert_eq!(events.len(), 3);
        assert!(matches!(&events[0], Event::Update { factor: 0, delta } if delta.shape() == (1, 2)));
        assert!(matches!(&events[1], Event::Label(v) if v.nnz() == 1));
    }
}
