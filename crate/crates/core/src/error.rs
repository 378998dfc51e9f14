use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("length {len} is not a perfect square")]
    NotSquare { len: usize },

    #[error("invalid chain: {0}")]
    InvalidChain(String),

    #[error("site {site} appears more than once after reduction onto the chain")]
    SiteCollision { site: usize },

    #[error("site {site} is outside an open chain of length {len}")]
    SiteOutOfRange { site: usize, len: usize },

    #[error("invalid model parameters: {0}")]
    InvalidModel(String),

    #[error("Hilbert dimension {dim} exceeds the cap of {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("scar tower check failed: {0}")]
    TowerResidual(String),

    #[error("unsupported projector derivation: model {model}, window {k}")]
    UnsupportedProjector { model: String, k: usize },

    #[error("momentum {k} is not on the grid 2*pi*l/{len}")]
    OffGridMomentum { k: f64, len: usize },

    #[error("invalid initial state: {0}")]
    InitialState(String),

    #[error("numerical validation failed: {0}")]
    Validation(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
