use std::path::PathBuf;

/// Errors raised across the solver, analysis and harness layers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {what} (expected {expected}, got {got})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("row {row} has zero norm")]
    ZeroRow { row: usize },

    #[error("malformed sparse structure: {0}")]
    MalformedSparse(String),

    #[error("matrix is numerically zero")]
    ZeroMatrix,

    #[error("inconsistent system: |Ax - b| = {residual:.3e} exceeds {tolerance:.3e}")]
    Inconsistent { residual: f64, tolerance: f64 },

    #[error("residual is zero; the system is already solved")]
    AlreadySolved,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty probability vector")]
    EmptyDistribution,

    #[error("no stopping rule: supply x* for RSE stopping or set a residual tolerance")]
    NoStoppingRule,

    #[error("trace cannot be certified: {0}")]
    NotCertifiable(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
