//! Simulation and analysis toolkit for Rabi-based microwave amplitude sensing
//! with a periodically driven two-level spin sensor.
//!
//! Internal units: angular frequencies in rad·µs⁻¹, times in µs. Conversion
//! from cyclic MHz happens once, at the configuration boundary (see [`units`]).
//!
//! Module map:
//!
//! - [`hamiltonian`]: parameter types, lab/rotating-frame Hamiltonians, kick
//!   operator, effective Hamiltonian and quasi-energy shift.
//! - [`propagator`]: unitary time evolution, closed-form Rabi population,
//!   Pauli expectations and micromotion diagnostics.
//! - [`metrology`]: quantum Fisher information, Cramér–Rao bound, magnetic
//!   sensitivity.
//! - [`measurement`]: Poisson photon-count readout and the QFI-from-data
//!   pipeline.
//! - [`experiments`]: named scenarios (Rabi scans, QFI scaling, robustness
//!   sweeps, dynamical decoupling under dephasing noise).

pub mod error;
pub mod experiments;
pub mod hamiltonian;
pub mod linalg;
pub mod measurement;
pub mod metrology;
pub mod propagator;
pub mod rng;
pub mod units;

pub use error::{Error, Result};
