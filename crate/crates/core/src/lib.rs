//! Spectra and dipole polarisation of one or two rigid-rotor polar molecules
//! coupled by the dipole-dipole interaction and a static electric field.

pub mod angular;
pub mod basis;
pub mod error;
pub mod hamiltonian;
pub mod molecule;
pub mod observables;
pub mod solver;
pub mod sweeps;

pub use error::{Error, Result};
