//! Exact state-vector simulation of a two-qubit engine fueled by entangling
//! dynamics and local projective measurements, its generalization to an
//! up-conversion chain, and the qubit-meter pre-measurement dynamics that
//! identify where the measurement energy comes from.
//!
//! Units: `hbar = k_B = 1`. Frequencies are angular and energies are in the
//! same units.

pub mod chain;
pub mod engine2q;
pub mod error;
pub mod hilbert;
pub mod mc;
pub mod meter;

pub use error::{Error, Result};
