//! Probabilistic cloning of the two states `|φ±(θ)⟩ = cos θ|1⟩ ± sin θ|0⟩`.
//!
//! [`analytics`] evaluates composite cloning strategies in closed form,
//! [`gates`] builds the merge/split and reduction unitaries, [`statekit`] is
//! a small dense simulator, and [`teleclone`] runs the GHZ-assisted
//! protocol. [`verify`] bundles named invariant checks.
pub mod analytics;
pub mod error;
pub mod gates;
pub mod statekit;
pub mod teleclone;
pub mod verify;

pub use error::{Error, Result};
