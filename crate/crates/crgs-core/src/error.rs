use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("operator is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("fragment too large: {qubits} qubits exceeds the {max}-qubit limit")]
    FragmentTooLarge { qubits: usize, max: usize },

    #[error("qubit pair straddles a resonance: {0}")]
    StraddlingResonance(String),

    #[error("degenerate cross-resonance drive: {0}")]
    DegenerateCr(String),

    #[error("gate not resolvable in pulse library: {0}")]
    LibraryMissing(String),

    #[error("fit failed: {0}")]
    FitFailure(String),

    #[error("calibration failed: {0}")]
    CalibrationFailure(String),

    #[error("serialization error: {0}")]
    Serialization(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;

impl CoreError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        CoreError::InvalidArgument(msg.into())
    }
}
