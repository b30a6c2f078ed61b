use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid rates: {0}")]
    InvalidRates(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("closed form undefined for birth rate {gamma} == death rate {delta}")]
    DegenerateRates { gamma: f64, delta: f64 },

    #[error("ODE integration failed at tau = {tau}: {reason}")]
    IntegrationFailure { tau: f64, reason: String },

    #[error("PGF evaluation failed at grid point (u, v) = ({u}, {v}): {source}")]
    GridPoint {
        u: usize,
        v: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("grid size {0} must be a power of two >= 2")]
    BadGridSize(usize),

    #[error("grid must be square, got {rows}x{cols}")]
    NonSquareGrid { rows: usize, cols: usize },

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("cannot sample {m} distinct indices from {n}")]
    MTooLarge { n: usize, m: usize },

    #[error("invalid index set: {0}")]
    BadIndices(String),

    #[error("non-finite iterate at iteration {iteration}")]
    NonFinite { iteration: usize },

    #[error("no convergence within the cap of {cap} steps")]
    NonConvergent { cap: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("malformed matrix file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerical machinery, as opposed to bad
    /// input or IO.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::IntegrationFailure { .. }
            | Error::NonFinite { .. }
            | Error::NonConvergent { .. }
            | Error::DegenerateRates { .. } => true,
            Error::GridPoint { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
