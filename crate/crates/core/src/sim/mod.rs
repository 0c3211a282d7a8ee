//! Statevector simulation of protocol circuits.

mod export;
mod run;
mod state;

pub use export::{read_state, write_state, AnyState, MAGIC, VERSION};
pub use run::{plan, run, ExecutionPlan, MeasurementRecord, OutcomePolicy, PolicyKind, RunOptions, RunOutput, Schedule};
pub use state::{von_neumann_bits, Choice, Precision, Real, StateVector, IMPOSSIBLE, MAX_RDM_QUBITS};
