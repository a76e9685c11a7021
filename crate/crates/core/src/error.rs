use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum QrcError {
    #[error("expected a {expected} matrix, found {found}")]
    Shape { expected: String, found: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("brickwall circuits need an even number of qubits (>= 2), got {0}")]
    OddQubitCount(usize),

    #[error("{n_qubits} qubits exceeds the supported maximum of {max}")]
    DimensionOverflow { n_qubits: usize, max: usize },

    #[error("gate is not dual-unitary (realignment unitarity residual {residual:.3e})")]
    NotDualUnitary { residual: f64 },

    #[error("input value {0} lies outside [0, 1)")]
    InputOutOfRange(f64),

    #[error("parameter `{name}` = {value} is out of range: {reason}")]
    Parameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("series diverged at step {step} (|y| = {value:.3e})")]
    Divergence { step: usize, value: f64 },

    #[error("non-finite value produced at step {step}")]
    NonFinite { step: usize },

    #[error("no real solution for the solvable-gate constraint at (alpha, beta) = ({alpha}, {beta})")]
    Rejected { alpha: f64, beta: f64 },

    #[error("training set is empty")]
    EmptyTrainingSet,

    #[error("evaluation set is empty")]
    EmptyEvaluationSet,

    #[error("initial operator has zero norm")]
    ZeroOperator,

    #[error("eigenvalue iteration did not converge for a {0}x{0} matrix")]
    NoConvergence(usize),
}

pub type Result<T> = std::result::Result<T, QrcError>;
