use thiserror::Error;

/// Errors raised by the simulation core, the gate constructors, and the
/// strategy analytics.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("state has {len} amplitudes, expected a power of two >= 2")]
    BadDimension { len: usize },
    #[error("state is not normalized (norm^2 = {norm_sqr})")]
    NotNormalized { norm_sqr: f64 },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("qubit index {index} out of range for {qubits} qubits")]
    QubitOutOfRange { index: usize, qubits: usize },
    #[error("qubit {0} listed more than once")]
    DuplicateQubit(usize),
    #[error("gate acts on {arity} qubits but {targets} targets were given")]
    ArityMismatch { arity: usize, targets: usize },
    #[error("matrix is not unitary (deviation {deviation:e})")]
    NotUnitary { deviation: f64 },
    #[error("matrix is not Hermitian (deviation {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("density matrix is invalid: {0}")]
    InvalidDensity(String),
    #[error("measurement basis is not orthonormal and complete (deviation {deviation:e})")]
    IncompleteBasis { deviation: f64 },
    #[error("Kraus pair violates completeness (deviation {deviation:e})")]
    IncompleteKraus { deviation: f64 },
    #[error("no measurement branch has non-negligible probability")]
    ZeroProbability,
    #[error("invalid bipartition: {0}")]
    InvalidBipartition(String),
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),
    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
