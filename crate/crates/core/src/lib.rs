//! Simulation and analysis of optimal symmetric 1→2 phase-covariant cloning of
//! polarization qubits by two-photon interference on a polarization-dependent
//! unbalanced beam splitter.
//!
//! The crate is organised bottom-up:
//!
//! - [`qstate`]: one- and two-photon polarization states, density operators,
//!   partial traces and pure-state fidelities.
//! - [`optics`]: waveplates, the post-selected beam-splitter map, the
//!   compensating glass-plate filter and the distinguishable-photon model.
//! - [`cloner`]: analytic clone fidelities, success probabilities, theory
//!   curves and the symmetrizing filter solver.
//! - [`counts`]: Poisson coincidence-count simulation and the count-based
//!   fidelity / success-probability estimators.
//! - [`tomography`]: Choi operators and maximum-likelihood reconstruction of
//!   the trace-decreasing cloning map with a virtual sink level.
//! - [`cli`]: configuration and the batch commands behind the `pcclone` binary.

pub mod cli;
pub mod cloner;
pub mod counts;
mod error;
pub mod optics;
pub mod qstate;
pub mod tomography;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = nalgebra::Complex<f64>;
