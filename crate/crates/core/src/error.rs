use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("validation failed:\n  - {}", .0.join("\n  - "))]
    Validation(Vec<String>),

    #[error("bad embedding file {path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("phrase {phrase:?} missing from text bank of model {model_id}")]
    MissingPhrase { phrase: String, model_id: String },

    #[error("axis {0}: left and right poles coincide")]
    DegenerateAxis(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimMismatch { expected: usize, actual: usize },

    #[error("score table is empty")]
    EmptyTable,

    #[error("incomplete grid, missing cells: {}", format_cells(.0))]
    IncompleteGrid(Vec<(String, String)>),

    #[error("model {model_id} has zero score variance on axis {axis_name}")]
    ZeroVariance { model_id: String, axis_name: String },

    #[error("perplexity calibration did not converge for row {row}")]
    Convergence { row: usize },

    #[error("row {row} has identical distances to every other point")]
    Degenerate { row: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

fn format_cells(cells: &[(String, String)]) -> String {
    cells
        .iter()
        .map(|(m, a)| format!("({m}, {a})"))
        .collect::<Vec<_>>()
        .join(", ")
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 usage/precondition, 2 data validation, 3 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) => 1,
            Error::Io { .. }
            | Error::Parse { .. }
            | Error::Validation(_)
            | Error::Format { .. }
            | Error::Alignment(_)
            | Error::MissingPhrase { .. }
            | Error::DimMismatch { .. }
            | Error::EmptyTable
            | Error::IncompleteGrid(_) => 2,
            Error::Numeric(_)
            | Error::DegenerateAxis(_)
            | Error::ZeroVariance { .. }
            | Error::Convergence { .. }
            | Error::Degenerate { .. } => 3,
        }
    }
}
