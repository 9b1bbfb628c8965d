//! Numerical laboratory for ground-state-transformed Lévy processes.
//!
//! Builds `H = −L + V` for an isotropic Lévy generator `L` and a potential
//! `V`, computes its ground state on a periodic Fourier grid, constructs the
//! transformed Markov process, simulates it, and evaluates the integral tests
//! that govern its almost-sure long-time envelopes.

pub mod envelopes;
pub mod error;
pub mod gst;
pub mod levy;
pub mod potentials;
pub mod quad;
pub mod simulate;
pub mod special;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
