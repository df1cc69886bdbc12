use thiserror::Error;

/// Errors raised by the simulation, training, and analysis layers.
///
/// Variants are grouped by how callers are expected to react: `Config`,
/// `Domain`, `Shape`, and the index errors indicate bad inputs; `Io` and
/// `Parse` indicate unreadable files; `Numerical` and `DegeneratePlane`
/// indicate a computation that cannot proceed on otherwise valid inputs.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("qubit index {index} out of range for {n_qubits} qubit(s)")]
    QubitIndex { index: usize, n_qubits: usize },

    #[error("parameter index {index} out of range for {len} parameter(s)")]
    ParamIndex { index: usize, len: usize },

    #[error("shape mismatch: expected length {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate plane: {0}")]
    DegeneratePlane(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
