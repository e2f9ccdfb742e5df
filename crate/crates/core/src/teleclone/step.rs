use rand::Rng;
use serde::Serialize;

use super::resource::{check_step, ResourceState, QUBIT_A, QUBIT_S};
use super::BellDetector;
use crate::analytics::{one_minus_overlap_pow, success_gamma};
use crate::error::{Error, Result};
use crate::gates::{bell_basis, pauli_z, reduction_u, BellState};
use crate::statekit::{
    apply_gate, basis_branches, factor_product, measure_in_basis, project_density, DensityMatrix, StateVector,
    C64,
};

/// Position of the input qubit `X` once it is placed above the resource.
pub const QUBIT_X: usize = 3;
const BELL_TARGETS: [usize; 2] = [QUBIT_X, QUBIT_S];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    /// A `Φ±` outcome was resolved; the residual is entangled.
    PhiOutcome,
    /// The detector cannot tell `Φ⁺` from `Φ⁻`.
    DetectorInconclusive,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepResult {
    /// `A` carries the next input `|φ±(θ_{N−j})⟩`, `Cⱼ` the finished clone.
    Success { a: StateVector, c: StateVector },
    Failure(FailureReason),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub bell: BellState,
    pub probability: f64,
    /// `(A, Cⱼ)` right after the measurement, before any correction.
    pub residual: StateVector,
    pub result: StepResult,
}

impl StepOutcome {
    pub fn succeeded(&self) -> bool {
        matches!(self.result, StepResult::Success { .. })
    }
}

/// `σ_z ⊗ σ_z` on `(A, Cⱼ)` of a two-qubit residual.
fn zz(state: &StateVector) -> Result<StateVector> {
    apply_gate(&apply_gate(state, &pauli_z(), &[1])?, &pauli_z(), &[0])
}

/// Unnormalized `(A, Cⱼ)` components `⟨b|_XS (|X⟩ ⊗ |resource⟩)` for every
/// Bell state `b`, in [`BellState::ALL`] order.
pub fn bell_components(input: &StateVector, resource: &ResourceState) -> Result<Vec<(f64, Vec<C64>)>> {
    let joint = input.tensor(&resource.state);
    Ok(basis_branches(&joint, &bell_basis(), &BELL_TARGETS)?
        .into_iter()
        .map(|(p, v)| (p, v.iter().copied().collect()))
        .collect())
}

/// One teleclone step: Bell measurement of `(X, S)`, then `σ_z ⊗ σ_z` on
/// `(A, Cⱼ)` after `Ψ⁺`. Both `Φ` outcomes count as failure.
///
/// The correction depends only on the outcome label, never on which of
/// `|φ±⟩` is being cloned.
pub fn teleclone_step<R: Rng + ?Sized>(
    input: &StateVector,
    resource: &ResourceState,
    detector: BellDetector,
    rng: &mut R,
) -> Result<StepOutcome> {
    if input.qubit_count() != 1 || resource.state.qubit_count() != 3 {
        return Err(Error::DimensionMismatch { left: input.dim(), right: resource.state.dim() });
    }
    let joint = input.tensor(&resource.state);
    let out = measure_in_basis(&joint, &bell_basis(), &BELL_TARGETS, rng)?;
    let bell = BellState::from_index(out.label);
    let residual = out.residual.expect("two qubits remain");
    let result = match bell {
        BellState::PsiMinus | BellState::PsiPlus => {
            let corrected = if bell == BellState::PsiPlus { zz(&residual)? } else { residual.clone() };
            let (a, c, _) = factor_product(&corrected, &[QUBIT_A])?;
            StepResult::Success { a, c }
        }
        _ => StepResult::Failure(match detector {
            BellDetector::Full => FailureReason::PhiOutcome,
            BellDetector::Interferometric => FailureReason::DetectorInconclusive,
        }),
    };
    Ok(StepOutcome { bell, probability: out.probability, residual, result })
}

/// Per-outcome probability and corrected conditional `(A, Cⱼ)` state when
/// the resource is a density matrix, in [`BellState::ALL`] order. The state
/// is `None` for a zero-probability outcome.
pub fn step_on_mixture(input: &StateVector, resource: &DensityMatrix) -> Result<Vec<(f64, Option<DensityMatrix>)>> {
    let joint = DensityMatrix::from_pure(input).tensor(resource);
    step_on_joint(&joint)
}

/// As [`step_on_mixture`] for an arbitrary `(X, S, A, Cⱼ)` density matrix;
/// the returned states are unnormalized (trace = outcome probability).
pub(crate) fn step_branches_unnormalized(joint: &DensityMatrix) -> Result<Vec<nalgebra::DMatrix<C64>>> {
    let z = pauli_z().matrix().kronecker(pauli_z().matrix());
    bell_basis()
        .iter()
        .zip(BellState::ALL)
        .map(|(b, label)| {
            let r = project_density(joint, b, &BELL_TARGETS)?;
            Ok(if label == BellState::PsiPlus { &z * r * &z } else { r })
        })
        .collect()
}

fn step_on_joint(joint: &DensityMatrix) -> Result<Vec<(f64, Option<DensityMatrix>)>> {
    step_branches_unnormalized(joint)?
        .into_iter()
        .map(|r| {
            let p = r.trace().re;
            Ok((p, if p > 1e-14 { Some(DensityMatrix::normalized(r)?) } else { None }))
        })
        .collect()
}

/// Result of one heralded compression `|φ±(θ)⟩ → |φ±(θ_N)⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct Compression {
    pub succeeded: bool,
    pub probability: f64,
    /// `|φ±(θ_N)⟩` on success, `|1⟩` on failure.
    pub state: StateVector,
}

/// Applies the reduction unitary `U(1, N, θ)` with a fresh probe in `|P₀⟩`
/// and reads the probe.
pub fn compress_copy<R: Rng + ?Sized>(input: &StateVector, n: u32, theta: f64, rng: &mut R) -> Result<Compression> {
    compress_with(input, &reduction_u(1, n, theta)?, rng)
}

pub(crate) fn compress_with<R: Rng + ?Sized>(
    input: &StateVector,
    u: &crate::statekit::UnitaryGate,
    rng: &mut R,
) -> Result<Compression> {
    let joint = apply_gate(&input.tensor(&StateVector::zero()), u, &[1, 0])?;
    let out = measure_in_basis(&joint, &[StateVector::zero(), StateVector::one()], &[0], rng)?;
    Ok(Compression {
        succeeded: out.label == 0,
        probability: out.probability,
        state: out.residual.expect("system qubit remains"),
    })
}

/// Success probability of step `j` with a GHZ-prepared resource:
/// `p₁/2 + p₋₁κ² = sin²(2θ_{N−j+1})/2 = (1 − cos^{2(N−j+1)}2θ)/2`.
pub fn step_probability(j: u32, n: u32, theta: f64) -> Result<f64> {
    check_step(j, n, theta)?;
    let closed = one_minus_overlap_pow(theta, 2 * (n - j + 1)) / 2.0;
    let (p1, p_minus1) = super::resource::branch_probabilities(j, n, theta)?;
    let kappa_sq = super::resource::kappa(j, n, theta)?.powi(2);
    let by_branches = p1 / 2.0 + p_minus1 * kappa_sq;
    debug_assert!((closed - by_branches).abs() < 1e-12, "{closed} vs {by_branches}");
    Ok(closed)
}

/// `Σₖ C(M,k) γᵏ (1−γ)^{M−k} (1 − (1−q)ᵏ)` with `γ = γ_{1N}`: at least one of
/// the `k` compressed copies carries a full chain of success rate `q`.
pub fn chain_success_probability(m: u32, n: u32, theta: f64, q: f64) -> Result<f64> {
    if m == 0 || m >= n {
        return Err(Error::OutOfRange(format!("need 1 <= M < N, got M={m}, N={n}")));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::OutOfRange(format!("chain success rate {q} outside [0, 1]")));
    }
    let gamma = success_gamma(1, n, theta)?;
    // Equivalent to 1 − (1 − γq)^M; the sum is kept in its binomial form.
    let mut total = 0.0;
    let mut binom = 1.0;
    for k in 0..=m {
        if k > 0 {
            binom *= (m - k + 1) as f64 / k as f64;
        }
        total += binom * gamma.powi(k as i32) * (1.0 - gamma).powi((m - k) as i32) * (1.0 - (1.0 - q).powi(k as i32));
    }
    Ok(total.clamp(0.0, 1.0))
}

/// Overall success probability with ideal resources, where each of the
/// `N − 1` steps succeeds with probability 1/2.
pub fn overall_probability(m: u32, n: u32, theta: f64) -> Result<f64> {
    chain_success_probability(m, n, theta, 0.5f64.powi(n as i32 - 1))
}

/// Overall success probability when every resource is GHZ-prepared.
pub fn overall_probability_ghz(m: u32, n: u32, theta: f64) -> Result<f64> {
    let q = (1..n).map(|j| step_probability(j, n, theta)).product::<Result<f64>>()?;
    chain_success_probability(m, n, theta, q)
}
