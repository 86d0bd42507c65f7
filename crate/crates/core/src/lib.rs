//! Simulation toolkit for a driven two-level control atom exchanging
//! excitations with the collective mode of an atomic ensemble through a
//! far-detuned cavity.
//!
//! The crate is organized bottom-up:
//!
//! - [`hilbert`]: tensor-product spaces over qubit / collective-spin /
//!   bosonic factors, sparse operators with a canonical entry order, pure
//!   states and density matrices.
//! - [`model`]: the driven Tavis-Cummings Hamiltonian in the interaction
//!   picture and the static effective Hamiltonians obtained after adiabatic
//!   elimination of the cavity (collective-spin form, bosonized
//!   Jaynes-Cummings form, dispersive form, and the multi-ensemble form).
//! - [`dynamics`]: exact propagation by Hermitian eigendecomposition,
//!   fixed-step RK4 for the time-dependent problem, the analytic
//!   Jaynes-Cummings propagator, and a Lindblad integrator.
//! - [`analysis`]: fidelities, partial traces, entanglement entropy, exact
//!   Wigner functions, and the bosonization defect.
//! - [`protocols`]: Fock-ladder climbing, resonant and dispersive cat-state
//!   preparation, inter-ensemble entanglement, the displaced-parity Wigner
//!   measurement, and the decoherence budget.

pub mod analysis;
pub mod dynamics;
mod error;
pub mod hilbert;
pub mod model;
pub mod protocols;

pub use error::{Error, Result};

/// Shorthand used throughout: all amplitudes and matrix elements are
/// double-precision complex numbers.
pub type C64 = num_complex::Complex64;
