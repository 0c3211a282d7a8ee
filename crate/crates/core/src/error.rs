use thiserror::Error;

use crate::lattice::QubitId;

/// Every failure the toolkit can report. Each variant is a distinct error
/// class; the CLI maps them to distinct exit codes via [`Error::exit_code`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("lattice too small: {0}")]
    TooSmall(String),
    #[error("plaquette 3-coloring required (both dimensions must be divisible by 3), got {l1}x{l2}")]
    NeedsColoring { l1: usize, l2: usize },
    #[error("gate {gate} acts on non-adjacent grid cells {a:?} and {b:?}")]
    NotGridLocal {
        gate: String,
        a: (usize, usize),
        b: (usize, usize),
    },
    #[error("operation does not apply to this protocol: {0}")]
    WrongProtocol(String),
    #[error("qubit capacity exceeded: schedule needs {needed} live qubits, cap is {cap}")]
    CapacityExceeded { needed: usize, cap: usize },
    #[error("qubit {0} is not live")]
    DeadQubit(QubitId),
    #[error("forced outcome {outcome:+} on {qubit} has probability {probability:.3e}")]
    ImpossibleOutcome {
        qubit: String,
        outcome: i8,
        probability: f64,
    },
    #[error("region of {size} qubits exceeds the limit of {limit}")]
    RegionTooLarge { size: usize, limit: usize },
    #[error("measurement record lacks an outcome for {0}")]
    MissingOutcome(QubitId),
    #[error("operator support of {size} qubits exceeds the limit of {limit}")]
    SupportTooLarge { size: usize, limit: usize },
    #[error("fusion coefficient N[{a}][{b}][{c}] = {value} is not a nonnegative integer")]
    NonIntegerFusion {
        a: usize,
        b: usize,
        c: usize,
        value: f64,
    },
    #[error("unknown group {0:?}")]
    UnknownGroup(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("malformed file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for this error class. Codes 1 and 2 are left to
    /// generic failures and argument parsing.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::TooSmall(_) => 10,
            Error::NeedsColoring { .. } => 11,
            Error::NotGridLocal { .. } => 12,
            Error::WrongProtocol(_) => 13,
            Error::CapacityExceeded { .. } => 14,
            Error::DeadQubit(_) => 15,
            Error::ImpossibleOutcome { .. } => 16,
            Error::RegionTooLarge { .. } => 17,
            Error::MissingOutcome(_) => 18,
            Error::SupportTooLarge { .. } => 19,
            Error::NonIntegerFusion { .. } => 20,
            Error::UnknownGroup(_) => 21,
            Error::Invalid(_) => 22,
            Error::Format(_) => 23,
            Error::Io(_) => 24,
            Error::Json(_) => 25,
        }
    }
}
