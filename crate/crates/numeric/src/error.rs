use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericError {
    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("entry ({row}, {col}) lies outside block {block} of size {size}")]
    EntryOutOfRange {
        block: usize,
        row: usize,
        col: usize,
        size: usize,
    },

    #[error("malformed SDPA input at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T, E = NumericError> = std::result::Result<T, E>;
