use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("shape mismatch for `{tensor}`: expected {expected}, got {got}")]
    ShapeMismatch {
        tensor: String,
        expected: String,
        got: String,
    },

    #[error("non-finite value in {0}")]
    NumericInput(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("duplicate key `{0}`")]
    DuplicateKey(String),

    #[error("integrity error: {kind} not found: {}", ids.join(", "))]
    Integrity { kind: &'static str, ids: Vec<String> },

    #[error("bad file format: {0}")]
    Format(String),

    #[error("missing tensor `{0}`")]
    MissingTensor(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("clock error: {0}")]
    Clock(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn shape(tensor: impl Into<String>, expected: impl ToString, got: impl ToString) -> Self {
        Error::ShapeMismatch {
            tensor: tensor.into(),
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }

    /// True for errors caused by bad user input rather than internal faults.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io(_) | Error::Clock(_))
    }
}
