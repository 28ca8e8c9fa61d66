use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum QkrError {
    #[error("momentum index {index} outside lattice [-{n_max}, {n_max}]")]
    IndexOutOfRange { index: i64, n_max: usize },

    #[error("lattice half-width must be positive")]
    EmptyLattice,

    #[error("amplitude vector has length {got}, lattice dimension is {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("state is not normalized (norm^2 = {0})")]
    NotNormalized(f64),

    #[error("truncation guard: probability {mass:.3e} within {margin} sites of the lattice edge exceeds {threshold:.1e}")]
    TruncationGuard {
        mass: f64,
        margin: usize,
        threshold: f64,
    },

    #[error("marked states have zero overlap with the initial state")]
    ZeroOverlap,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("numerical fault: {0}")]
    Numerical(String),

    #[error("insufficient realizations: {0}")]
    InsufficientRealizations(String),
}

pub type Result<T> = std::result::Result<T, QkrError>;
