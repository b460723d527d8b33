use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} qubits, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("qubit index {index} out of range for {n} qubits")]
    OutOfRange { index: usize, n: usize },

    #[error("region of {size} qubits exceeds the enumeration cap of {cap}")]
    CapExceeded { size: usize, cap: usize },

    #[error("at most 64 qubits are supported, got {0}")]
    TooManyQubits(usize),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("regions overlap: {0}")]
    RegionOverlap(String),

    #[error("empty input")]
    EmptyInput,

    #[error("no shots recorded for k = {0}")]
    MissingGroup(u32),

    #[error("every decay point is below the noise floor; the eigenvalue or the SPAM constant is too small to resolve")]
    IndeterminateDecay,

    #[error("only one repetition count is above the noise floor; at least two are needed for a fit")]
    InsufficientData,

    #[error("missing eigenvalue estimate for {0}")]
    MissingEigenvalue(String),

    #[error("non-positive marginal entry {0}")]
    NonPositiveMarginal(f64),

    #[error("MCMC sampling requested above the exact-enumeration cap but no chain is configured")]
    UnconfiguredMcmc,

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
