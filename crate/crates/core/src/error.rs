use thiserror::Error;

/// Errors produced by the metric spaces, solvers and the simulation engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid weight vector: {0}")]
    InvalidWeights(String),

    #[error("space does not supply a barycenter rule: {0}")]
    UnsupportedSpace(String),

    #[error("quantile grid error: {0}")]
    Grid(String),

    #[error("matrix error: {0}")]
    Matrix(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("solver failed to converge after {iterations} iterations (residual {residual:.3e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("barycenter solve failed for agent {agent}: {source}")]
    AgentUpdate {
        agent: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
