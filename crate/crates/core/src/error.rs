use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("cannot take the tensor product of a state with an operator")]
    KindMismatch,

    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error("invalid subsystem dimensions {0:?} (each subsystem needs at least two levels)")]
    InvalidDims(Vec<usize>),

    #[error("operator is not hermitian (max |H - H†| = {0:e})")]
    NotHermitian(f64),

    #[error("expectation value has imaginary part {0:e}; observable is not hermitian")]
    HermiticityViolation(f64),

    #[error("state is not normalized (norm² = {0})")]
    NotNormalized(f64),

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("projectors do not form a complete orthogonal set: {0}")]
    IncompleteProjectors(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("state has weight {0:e} outside the {{|01>, |10>}} subspace")]
    OutsideSubspace(f64),

    #[error("energy/entropy ratio diverges: {0}")]
    DivergentRatio(String),

    #[error("parameter out of domain: {0}")]
    Parameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
