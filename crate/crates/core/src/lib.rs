//! Simulation toolkit for linear-optics homodyne measurement schemes.
//!
//! The crate symbolically propagates bosonic operators through feed-forward
//! interferometer networks, recovers expectation values of the signal
//! annihilation/creation operators via the eight-port (double balanced)
//! homodyne scheme, and computes the associated noise spectral densities.
//! A truncated-Fock brute-force oracle provides independent verification.

pub mod algebra;
pub mod fock;
pub mod network;
pub mod noise;
pub mod schemes;
pub mod states;

pub use algebra::{AlgebraError, LinearModeMap, ModeId, MonomialKey, OperatorPoly, Sideband, C64};
