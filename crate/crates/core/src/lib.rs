//! Dynamic number squeezing of a two-component condensate through a
//! Kerr-sheared Ramsey sequence.
//!
//! Three engines share one set of conventions (SI at the public surface,
//! rotating frame on resonance, normal-ordered `n(n-1)` Kerr energies):
//!
//! * [`two_mode`] evaluates the number moments of the second mode in closed
//!   form at any atom number, with an optional classical number-noise mixture.
//! * [`fock`] propagates the exact two-mode state in a truncated Fock basis.
//!   It is slow and small, and exists to check the closed form.
//! * [`tw`] integrates the 1D coupled truncated-Wigner field equations with
//!   a split-step spectral method and reduces trajectory ensembles to
//!   normally-ordered moments.

pub mod error;
pub mod fock;
pub mod moments;
pub mod quadrature;
pub mod tw;
pub mod two_mode;
pub mod units;

pub use error::{Error, Result};
pub use moments::MomentSet;
pub use num_complex::Complex64;
pub use units::{KerrParams, SpeciesParams, TrapParams};
