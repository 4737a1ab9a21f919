use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value encountered: {0}")]
    NonFinite(&'static str),
    #[error("matrix is not symmetric (|a12 - a21| = {0:.3e})")]
    NotSymmetric(f64),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("quadrature node count {got} below floor {floor}")]
    QuadratureTooCoarse { got: usize, floor: usize },
    #[error("empty index range")]
    EmptyRange,
    #[error("oscillation under-resolved: grid size {got}, need at least {need}")]
    UnderResolved { got: usize, need: usize },
    #[error("power iteration did not converge within {0} iterations")]
    NoConvergence(usize),
    #[error("van der Corput hypothesis violated: {0}")]
    VdcHypothesis(String),
    #[error("slab of width {width:.3e} unresolved by axis 3; need a stratified map with step <= {need:.3e}")]
    UnresolvedSlab { width: f64, need: f64 },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
