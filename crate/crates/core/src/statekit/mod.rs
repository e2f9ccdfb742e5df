//! Dense simulation core for a handful of qubits: pure states, density
//! matrices, gate application, projective and two-outcome generalized
//! measurements, and distance/entanglement metrics.
//!
//! Qubit 0 is the least significant bit of an amplitude index. Every value
//! here is immutable once built; the only stateful inputs are the explicit
//! RNG handles taken by the sampling functions.

mod channel;
mod density;
mod gate;
mod measure;
mod metrics;
mod state;

pub use channel::{NoiseChannel, NoiseKind};
pub use density::{partial_trace, project_density, DensityMatrix};
pub use gate::{apply_gate, unitarity_deviation, UnitaryGate};
pub use measure::{
    apply_generalized_measurement, basis_branches, basis_deviation, kraus_probabilities, measure_in_basis,
    outcome_probabilities, sample_index, MeasurementOutcome,
};
pub use metrics::{
    factor_product, fidelity, schmidt_coefficients, schmidt_rank, trace_distance, trace_norm_of_difference,
};
pub use state::{tensor, tensor_all, StateVector};

pub use nalgebra::{DMatrix, DVector};

/// Complex amplitude type used throughout.
pub type C64 = nalgebra::Complex<f64>;

/// Tolerance for algebraic identities (norms, unitarity, Hermiticity).
pub const NORM_TOL: f64 = 1e-10;
/// Tolerance where an eigen- or singular-value decomposition is involved.
pub const EIGEN_TOL: f64 = 1e-9;
/// Branches below this probability are never sampled.
pub const SAMPLING_FLOOR: f64 = 1e-12;
