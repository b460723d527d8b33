//! Learning the structure and parameters of local Pauli noise channels.

pub mod channel;
pub mod coeffs;
pub mod error;
pub mod estimate;
pub mod harness;
pub mod model;
pub mod pauli;
pub mod rng;
pub mod structure;

pub use error::{Error, Result};
pub use pauli::{PauliString, Pauli1, Region};
