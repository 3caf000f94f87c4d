use ccg_numeric::NumericError;
use thiserror::Error;

use crate::game::GameInput;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("dimension d = {0} is not supported (need d >= 2)")]
    InvalidDimension(usize),

    #[error("k = {k} out of range (kmax = {kmax})")]
    KOutOfRange { k: usize, kmax: usize },

    #[error("input {0:?} out of range")]
    InputOutOfRange(GameInput),

    #[error("output G = {g} out of range for d = {d}")]
    OutputOutOfRange { g: usize, d: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid behavior: {0}")]
    InvalidBehavior(String),

    #[error("output distribution for {input:?} sums to {sum}")]
    UnnormalizedPolicy { input: GameInput, sum: f64 },

    #[error("d = {d} refused: {reason}")]
    SearchSpaceTooLarge { d: usize, reason: String },

    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),

    #[error("unsupported NPA level `{0}`")]
    UnsupportedLevel(String),

    #[error("SDP solver failed ({context}): {status}")]
    Solver { context: String, status: String },

    #[error("unknown engine `{0}`")]
    UnknownEngine(String),

    #[error(transparent)]
    Numeric(#[from] NumericError),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = CoreError> = std::result::Result<T, E>;
