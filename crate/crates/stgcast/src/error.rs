use thiserror::Error;

/// Crate-wide error type. Variants are grouped by the exit code they map to:
/// numeric/training faults exit with 1, input/config faults with 2.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: shape mismatch between {lhs} and {rhs}")]
    Shape {
        op: &'static str,
        lhs: String,
        rhs: String,
    },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("no overlap between graph nodes and data detectors")]
    NoOverlap,

    #[error("incompatible dimensions: expected {expected}, got {actual}")]
    Incompatible { expected: String, actual: String },

    #[error("numeric fault: {0}")]
    NumericFault(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn shape(op: &'static str, lhs: impl std::fmt::Display, rhs: impl std::fmt::Display) -> Self {
        Error::Shape {
            op,
            lhs: lhs.to_string(),
            rhs: rhs.to_string(),
        }
    }

    /// Process exit code for the CLI: 0 success, 1 numeric/training fault,
    /// 2 input/config fault.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NumericFault(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
