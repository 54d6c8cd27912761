use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("matrix is not unitary (max deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("unknown gate `{0}`")]
    UnknownGate(String),

    #[error("qubit index {index} out of range for {num_qubits} qubits")]
    QubitOutOfRange { index: usize, num_qubits: usize },

    #[error("expected a {expected}-qubit operator, got {got} qubits")]
    WrongQubitCount { expected: usize, got: usize },

    #[error("local product has no factors")]
    EmptyProduct,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("gate is not entangling; no number of uses can produce a CNOT")]
    NotEntangling,

    #[error("CNOT strength {0:.3e} is degenerate (optimizer failure)")]
    DegenerateCnotStrength(f64),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
