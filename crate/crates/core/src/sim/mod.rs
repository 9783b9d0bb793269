//! Simulation backends.

pub mod gate;
pub mod state;

pub use gate::{gate_level_run, GateState, GATE_QUBIT_BUDGET};
pub use state::{total_variation, Amplitude, BranchComponent, BranchState, GarbageLabel, Outcome, QueryLedger};
