use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid permutation {perm:?} for a rank-{rank} tensor")]
    InvalidPermutation { perm: Vec<usize>, rank: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("no tensor bound to input slot {0}")]
    MissingBinding(usize),

    #[error("node index {index} out of range for a network of {len} nodes")]
    InvalidNode { index: usize, len: usize },

    #[error("malformed network: {0}")]
    InvalidNetwork(String),

    #[error("invalid representation type: {0}")]
    InvalidType(String),

    /// The complex-to-real change of basis left an imaginary residual.
    #[error("basis convention error: imaginary residual {0:e}")]
    BasisConvention(f64),

    #[error("enumeration too large: {count} candidate matchings exceed the cap of {cap}")]
    EnumerationTooLarge { count: u128, cap: u128 },

    #[error("triangle network is not proportional to the CG tensor (kappa = {kappa:e}, residual = {residual:e})")]
    ProportionalityFailure { kappa: f64, residual: f64 },

    #[error("non-physical deformation: det(F) = {0}")]
    NonPhysicalDeformation(f64),

    #[error("training diverged (seed {seed}, step {step})")]
    TrainingDiverged { seed: u64, step: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
