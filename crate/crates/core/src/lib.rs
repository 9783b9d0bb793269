//! Exact classical simulation of quantum best-arm identification.
//!
//! The variable-time search over arms is simulated at the level of branch
//! amplitudes (see [`sim`]); a dense statevector backend cross-checks it on
//! small instances. Classical baselines and the adversary lower bound live
//! alongside so that experiments can compare all three.

pub mod amp_est;
pub mod bai;
pub mod bounds;
pub mod classical;
pub mod error;
pub mod oracle;
pub mod rng;
pub mod sim;
pub mod stats;
pub mod vta;
pub mod vtaa;

pub use error::{Error, Result};
pub use oracle::BanditInstance;
