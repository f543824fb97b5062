use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: expected {expected:?}, got {got:?}")]
    DimensionMismatch {
        op: &'static str,
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("dimension overflow: {0}")]
    DimensionOverflow(String),

    #[error("non-finite value at flat index {0}")]
    NonFinite(usize),

    #[error("length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("matrix is not symmetric")]
    NotSymmetric,

    /// Cholesky of the second pencil argument failed.
    #[error("matrix is not positive definite; regularize it (add a small multiple of the identity) or check its rank")]
    NotPositiveDefinite,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("rank condition violated: {0}")]
    RankDeficient(String),

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    pub(crate) fn mismatch(op: &'static str, expected: (usize, usize), got: (usize, usize)) -> Self {
        Error::DimensionMismatch { op, expected, got }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, err: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            message: err.to_string(),
        }
    }
}

/// Errors from the text formats (KMAT, sparse vectors, update streams) and
/// the binary tree snapshot. Offsets are byte offsets into the input.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("missing header")]
    MissingHeader,

    #[error("malformed header at byte {offset}: {message}")]
    MalformedHeader { offset: usize, message: String },

    #[error("truncated payload at byte {offset}: expected {expected} values, found {found}")]
    Truncated {
        offset: usize,
        expected: usize,
        found: usize,
    },

    #[error("invalid number {token:?} at byte {offset}")]
    InvalidNumber { offset: usize, token: String },

    #[error("non-finite value at byte {offset}")]
    NonFinite { offset: usize },

    #[error("unexpected trailing data at byte {offset}")]
    TrailingData { offset: usize },

    #[error("index {index} at byte {offset} out of range for length {len}")]
    IndexOutOfRange { offset: usize, index: usize, len: usize },

    #[error("bad magic bytes")]
    BadMagic,

    #[error("invalid record at byte {offset}: {message}")]
    InvalidRecord { offset: usize, message: String },
}
