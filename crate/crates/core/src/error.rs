use thiserror::Error;

/// Errors raised by the simulation stack.
#[derive(Debug, Error)]
pub enum Error {
    /// An input parameter violates its documented range or shape.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// The dense representation would be too large.
    #[error("capacity error: {qubits} qubits exceeds the dense limit of {limit}")]
    Capacity { qubits: usize, limit: usize },

    /// A pre-condition on an operator (Hermitian, unitary, dimension) was not met.
    #[error("contract violation: {0}")]
    Contract(String),

    /// The requested coupling cannot be produced by the spin system.
    #[error("unrealizable coupling: {0}")]
    UnrealizableCoupling(String),

    /// The pulse compiler could not produce a valid program.
    #[error("compile error: {0}")]
    Compile(String),

    #[error("no reachable excited state above population floor {floor}")]
    NoReachableState { floor: f64 },

    #[error("no spectral peak: spectrum is identically zero")]
    NoPeak,

    /// The time series carries no signal to fit.
    #[error("degenerate series: {0}")]
    Degenerate(String),

    /// Malformed text input (pulse program or config file).
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("config error in `{key}`: {msg}")]
    Config { key: String, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}
