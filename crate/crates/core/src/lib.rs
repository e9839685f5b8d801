//! Element-by-element simulation of a complete hyperentangled Bell-state
//! analyzer for two-photon states entangled in both polarization and
//! time-bin degrees of freedom.
//!
//! The analyzer distinguishes all 16 hyperentangled Bell states in two
//! steps: a pair of cross-Kerr quantum nondemolition readouts resolves the
//! polarization Bell state without consuming the photons, and per-photon
//! single-photon Bell measurements then pin down the time-bin state through
//! the surviving polarization correlations. On top of the analyzer sit two
//! protocols: teleportation of a single-photon two-qubit state and
//! entanglement swapping between hyperentangled pairs.
//!
//! Layout:
//! - [`statevec`]: sparse labeled state vectors and the algebraic primitives
//! - [`optics`]: the elemental operations (splitters, wave plates, Pockels
//!   cells, delays, cross-Kerr taggers, homodyne readout, detectors)
//! - [`qnd`]: step 1, the nondestructive polarization readout
//! - [`spbsa`]: step 2, the single-photon Bell-state analyzer
//! - [`hbsa`]: the combined 16-state classifier and its group table
//! - [`protocols`]: teleportation and entanglement swapping
//! - [`report`]: verification sweeps and trial runners (rayon-parallel by
//!   default, sequential without the `parallel` feature)

pub mod error;
pub mod hbsa;
pub mod optics;
pub mod protocols;
pub mod qnd;
pub mod report;
pub mod rng;
pub mod spbsa;
pub mod statevec;

pub use error::{Error, Result};
