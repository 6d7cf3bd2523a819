use std::path::PathBuf;

/// Errors raised by the model, operator and reconstruction code.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("singular tridiagonal system in {context} (pivot {pivot:e} at row {row})")]
    SingularSystem {
        context: &'static str,
        row: usize,
        pivot: f64,
    },

    #[error("degenerate projector geometry: {0}")]
    DegenerateGeometry(String),

    #[error("non-finite objective at outer iteration {iteration}: {detail}")]
    NonFiniteObjective { iteration: usize, detail: String },

    #[error("no counts in measured data")]
    NoCounts,

    #[error("bad file format in {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
