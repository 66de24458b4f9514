use thiserror::Error;

/// Errors raised anywhere in the simulation and training pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit index {qubit} out of range for a {n_qubits}-qubit register")]
    QubitOutOfRange { qubit: usize, n_qubits: usize },

    #[error("invalid gate: {0}")]
    InvalidGate(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("amplitude vector length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("outcome {outcome} has probability {probability:e}, cannot post-select")]
    ImpossibleOutcome { outcome: usize, probability: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("sampling error: requested {requested} samples from a population of {available}")]
    Sampling { requested: usize, available: usize },

    #[error("numeric error: {0}")]
    NonFinite(String),

    #[error("{stage} training diverged at iteration {iteration}")]
    Divergence {
        stage: &'static str,
        iteration: usize,
        /// Cost history up to and including the failing iteration.
        costs: Vec<f64>,
    },

    #[error("state is not a product across the partition (residual {residual:e}, tolerance {tolerance:e})")]
    NotProduct { residual: f64, tolerance: f64 },

    #[error("subsystem states have disjoint computational-basis supports")]
    OrthogonalSupports,

    #[error("corrupt compact state: {0}")]
    CorruptCompactState(String),

    #[error("branch weight {0:e} is degenerate")]
    DegenerateBranch(f64),

    #[error("format error: {0}")]
    Format(String),

    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
