use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    Dimension(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("invalid sparse structure: {0}")]
    SparseStructure(String),

    #[error("invalid block size p = {p} for dimension {dim} (need 1 <= p <= dim)")]
    BlockSize { p: usize, dim: usize },

    #[error("degenerate sampling space: every block has zero Frobenius norm")]
    DegenerateSampling,

    #[error("numerical overflow in {0}")]
    NumericalOverflow(&'static str),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("inadmissible relaxation pair (zeta = {zeta}, eps = {eps}): {reason}")]
    Inadmissible { zeta: f64, eps: f64, reason: String },

    #[error("cannot construct inconsistency: Null(A^T) trivial")]
    TrivialLeftNullSpace,

    #[error("problem too large for dense computation: {0}")]
    TooLarge(String),

    #[error("relative solution error undefined: zero initial error with nonzero current error")]
    UndefinedRse,

    #[error("unsupported Matrix Market qualifier `{0}`")]
    UnsupportedQualifier(String),

    #[error("parse error at {path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }
}
