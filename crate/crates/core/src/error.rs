//! Error types shared across the simulator.

use thiserror::Error;

/// Errors raised by state-vector algebra, optical elements and the analyzer
/// stages built on top of them.
#[derive(Debug, Error)]
pub enum Error {
    /// A superposition cancelled to the zero vector.
    #[error("superposition cancelled to the zero state")]
    ZeroState,

    /// A map that must be an isometry changed the norm beyond tolerance.
    #[error("norm not preserved: {before} -> {after}")]
    NonUnitary { before: f64, after: f64 },

    /// A photon arrived at an element on a path the wiring does not accept.
    #[error("wiring error: {0}")]
    Wiring(String),

    /// A probe phase counter left the protocol range [-2, 2].
    #[error("probe counter overflow: k = {0}")]
    CounterOverflow(i32),

    /// A homodyne readout found a counter outside {-2, 0, +2}.
    #[error("unexpected probe counter at homodyne: k = {0}")]
    UnexpectedCounter(i32),

    /// A photon reached a detector with its time slot still in superposition.
    #[error("indefinite time slot at detection: saw slots {0} and {1}")]
    IndefiniteSlot(i32, i32),

    /// Exhaustive measurement branches disagreed on the decoded label.
    #[error("inconsistent classification across branches: {0}")]
    InconsistentBranch(String),

    /// A single-photon Bell state fired more than one detector port.
    #[error("ambiguous detector mapping for {0}")]
    AmbiguousMapping(String),

    /// The simulated detection table disagreed with the stored transcription.
    #[error("detection table mismatch: {0}")]
    TableMismatch(String),

    /// The residual photons after a measurement did not factor into a unique
    /// pure state.
    #[error("no unique residual state: {0}")]
    AmbiguousResidual(String),

    /// An input state violated a protocol precondition.
    #[error("invalid input state: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
