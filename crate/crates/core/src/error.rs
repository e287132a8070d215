use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("index out of range: {0}")]
    Index(String),

    #[error(
        "eigensolver did not converge{} after {iterations} iterations (max residual {:.3e})",
        kidx.map(|k| format!(" at k-point {k}")).unwrap_or_default(),
        residuals.iter().cloned().fold(0.0_f64, f64::max)
    )]
    Convergence {
        kidx: Option<usize>,
        iterations: usize,
        residuals: Vec<f64>,
    },

    #[error("column selection requested on an all-zero matrix")]
    DegenerateInput,

    #[error("column cap {cap} reached before tolerance; achieved relative pivot {achieved:.3e}")]
    CapExceeded { cap: usize, achieved: f64 },

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag, used by the CLI error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Dimension { .. } => "dimension",
            Error::Index(_) => "index",
            Error::Convergence { .. } => "convergence",
            Error::DegenerateInput => "degenerate_input",
            Error::CapExceeded { .. } => "cap_exceeded",
            Error::Resource(_) => "resource",
            Error::Linalg(_) => "linalg",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}
