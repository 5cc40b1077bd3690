use thiserror::Error;

/// Errors raised by the simulator and the estimation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("size error: {0}")]
    Size(String),

    #[error("index {index} out of range for a register of {len} states")]
    Index { index: usize, len: usize },

    #[error("parse error on line {line}: {text:?} is not a finite decimal")]
    Parse { line: usize, text: String },

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("measured fraction {f_hat} exceeds the largest in-range prediction {f_max}")]
    OutOfRange { f_hat: f64, f_max: f64 },

    #[error("degenerate threshold: no dataset value at or above {0}")]
    DegenerateThreshold(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
