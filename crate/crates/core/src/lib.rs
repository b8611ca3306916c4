//! Electron–proton (NEO) Hamiltonians through to noise-mitigated barrier heights.

pub mod adapt;
pub mod analysis;
pub mod ansatz;
pub mod aqc;
pub mod circuit;
pub mod cli;
pub mod error;
pub mod fermion;
pub mod hamiltonian;
pub mod linalg;
pub mod noise;
pub mod optimize;
pub mod pauli;
pub mod pipeline;
pub mod sim;
pub mod zne;

pub use error::{Error, Result};
