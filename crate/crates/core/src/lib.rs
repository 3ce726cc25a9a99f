//! Simulation of a qubit coupled to one or more cavity modes, and recovery of
//! the coupling Hamiltonian and the cavity's low-order moments from qubit
//! process-tomography time series alone.
//!
//! The pipeline is:
//!
//! 1. [`dynamics`] builds a Hamiltonian and [`tomography`] samples the nine
//!    series `c_i^(k)(t)` for the three `σ_k` preparations.
//! 2. [`estimator`] takes finite-difference derivatives at `t = 0` and
//!    inverts the derivative relations for `a`, `g`, `ω`, the quadrature
//!    means, the variance matrix, and (dispersive regime) photon statistics.
//! 3. [`oracle`] computes the same derivatives exactly from nested
//!    commutators, independent of the propagator, for cross-checking.

pub mod dynamics;
pub mod error;
pub mod estimator;
pub mod linalg;
pub mod oracle;
pub mod quantum;
pub mod scenario;
pub mod sweep;
pub mod tomography;

pub use error::{Error, ErrorClass, Result};
pub use estimator::{
    estimate_from_derivatives, estimate_record, finite_difference_derivatives, DerivativeSet,
    EstimateOptions, EstimateReport, Stencil,
};
pub use linalg::{CMatrix, C64};
pub use quantum::CavityStateSpec;
pub use scenario::{Scenario, Truth};
pub use tomography::{NoiseSpec, SystemSpec, TomographyRecord};
