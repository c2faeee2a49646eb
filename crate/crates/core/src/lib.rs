//! Simulation of pairing Hamiltonians on a three-spin NMR register: exact
//! spectra, Trotterized evolution, adiabatic state preparation, pulse
//! compilation and simulation, and gap spectroscopy.

pub mod adiabatic;
pub mod config;
pub mod error;
pub mod exact;
pub mod hamiltonian;
pub mod nmr;
pub mod operator;
pub mod pipeline;
pub mod resource;
pub mod spectroscopy;
pub mod trotter;

pub use error::{Error, Result};
pub use operator::{DenseOperator, StateVector};
