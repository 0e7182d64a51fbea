use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("eigensolver did not converge ({0})")]
    NoConvergence(&'static str),

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("spectrum contains a sentinel or non-positive eigenvalue ({0:e}); use the projected width")]
    SentinelEigenvalue(f64),

    #[error("spectral density mass {0} is below 0.5")]
    DensityMass(f64),

    #[error("training diverged at epoch {epoch}")]
    Diverged { epoch: usize, history: Vec<f64> },

    #[error("hessian symmetrization residual {residual:e} exceeds {limit:e}")]
    AsymmetricHessian { residual: f64, limit: f64 },

    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("config: {0}")]
    Config(String),

    #[error("output directory is locked by another run ({0})")]
    Locked(std::path::PathBuf),

    #[error("stage {stage} failed: {source}")]
    Stage { stage: &'static str, source: Box<Error> },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
