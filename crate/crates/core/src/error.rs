use thiserror::Error;

use crate::sim::BasisLabel;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("schema violation: {0}")]
    Schema(String),

    #[error("schema mismatch: expected {expected}, found {found}")]
    SchemaMismatch { expected: u8, found: u8 },

    #[error("operator `{op}` is not defined on label {label}")]
    Domain { op: String, label: BasisLabel },

    #[error("state is not normalized (norm {norm:.3e})")]
    NotNormalized { norm: f64 },

    #[error("operator `{op}` changed the norm from {before:.12} to {after:.12}")]
    NormDrift { op: String, before: f64, after: f64 },

    #[error(
        "operator `{op}` is not an isometry: Gram entry ({row}, {col}) deviates by {deviation:.3e}"
    )]
    NotIsometry {
        op: String,
        row: usize,
        col: usize,
        deviation: f64,
    },

    #[error("invalid comparison pair ({0}, {0})")]
    InvalidPair(usize),

    #[error("register position {position} out of range for a label with {len} registers")]
    RegisterPosition { position: usize, len: usize },

    #[error("invalid oracle: {0}")]
    Oracle(String),

    #[error("invalid permutation: {0}")]
    Permutation(String),

    #[error("parameter out of range: {0}")]
    Range(String),

    #[error("incomplete ensemble: expected {expected} states, got {found}")]
    IncompleteEnsemble { expected: usize, found: usize },

    #[error("progress value has imaginary part {imag:.3e} at step {step}")]
    ComplexProgress { step: usize, imag: f64 },

    #[error(
        "power iteration did not converge after {iterations} iterations (residual {residual:.3e})"
    )]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("invalid tree: {0}")]
    Tree(String),

    #[error("covering construction failed: {0}")]
    Covering(String),

    #[error("covering invariant violated: {0}")]
    CoveringInvariant(String),

    #[error("search space cap of {cap} nodes exceeded")]
    SearchCap { cap: usize },

    #[error("exactness violated: expected answer {expected} with probability {probability:.12}")]
    Exactness { expected: usize, probability: f64 },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
