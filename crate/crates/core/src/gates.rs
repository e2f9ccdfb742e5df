//! Concrete states, unitaries and measurements used by the cloning protocol.
//!
//! Two-qubit matrices are written on the basis `{|00⟩, |01⟩, |10⟩, |11⟩}`
//! of `(first, second)`, so they are applied with `targets = [first, second]`.
//! For the system/probe gates the system qubit is `first` and the probe
//! (`|P₀⟩ = |0⟩`, `|P₁⟩ = |1⟩`) is `second`.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::analytics::{chain_angle, check_angle, overlap, success_gamma};
use crate::error::{Error, Result};
use crate::statekit::{apply_gate, StateVector, UnitaryGate, C64, NORM_TOL};

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn real_matrix(n: usize, entries: &[f64]) -> DMatrix<C64> {
    DMatrix::from_row_slice(n, n, &entries.iter().map(|&x| c(x)).collect::<Vec<_>>())
}

fn gate_unchecked(matrix: DMatrix<C64>) -> UnitaryGate {
    UnitaryGate::new(matrix).expect("constructed matrix is unitary")
}

pub fn pauli_x() -> UnitaryGate {
    gate_unchecked(real_matrix(2, &[0.0, 1.0, 1.0, 0.0]))
}

pub fn pauli_z() -> UnitaryGate {
    gate_unchecked(real_matrix(2, &[1.0, 0.0, 0.0, -1.0]))
}

/// `R_y(θ) = [[cos θ/2, sin θ/2], [−sin θ/2, cos θ/2]]`.
pub fn ry(theta: f64) -> UnitaryGate {
    let (s, co) = (theta / 2.0).sin_cos();
    gate_unchecked(real_matrix(2, &[co, s, -s, co]))
}

/// Which member of the state pair `|φ±(θ)⟩` is meant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flipped(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

/// `|φ±(θ)⟩ = cos θ|1⟩ ± sin θ|0⟩`.
pub fn phi_state(theta: f64, sign: Sign) -> StateVector {
    let (s, co) = theta.sin_cos();
    StateVector::from_real(&[sign.value() * s, co]).expect("unit vector")
}

/// `θ₃` with `cos 2θ₃ = cos 2θ₁ · cos 2θ₂`.
pub fn merged_angle(theta1: f64, theta2: f64) -> f64 {
    // sin²θ₃ = sin²θ₁ + cos 2θ₁ · sin²θ₂
    let (s1, s2) = (theta1.sin(), theta2.sin());
    let s3_sq = s1 * s1 + overlap(theta1) * s2 * s2;
    s3_sq.sqrt().min(FRAC_1_SQRT_2).asin()
}

/// How the two columns of the D gate that the cloning relation leaves free
/// are filled in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Completion {
    /// Gram–Schmidt over `|00⟩, |01⟩, |10⟩, |11⟩` in that order.
    #[default]
    GramSchmidt,
    /// Gram–Schmidt over the reversed seed order, assigned to the free
    /// columns in swapped order.
    Reversed,
}

/// The two columns fixed by `D|φ±(θ₃)⟩|1⟩ = |φ±(θ₁)⟩|φ±(θ₂)⟩`:
/// `(D|0⟩|1⟩, D|1⟩|1⟩)`.
pub fn d_gate_columns(theta1: f64, theta2: f64) -> Result<(StateVector, StateVector)> {
    let (theta1, theta2) = (check_angle(theta1)?, check_angle(theta2)?);
    let theta3 = merged_angle(theta1, theta2);
    if theta3.sin() < 1e-12 {
        return Err(Error::OutOfRange("D gate is degenerate when both angles vanish".into()));
    }
    let (s1, c1) = theta1.sin_cos();
    let (s2, c2) = theta2.sin_cos();
    let (s3, c3) = theta3.sin_cos();
    let col01 = StateVector::normalized(vec![c(0.0), c(s1 * c2 / s3), c(c1 * s2 / s3), c(0.0)])?;
    let col11 = StateVector::normalized(vec![c(s1 * s2 / c3), c(0.0), c(0.0), c(c1 * c2 / c3)])?;
    Ok((col01, col11))
}

pub fn d_gate(theta1: f64, theta2: f64) -> Result<UnitaryGate> {
    d_gate_with(theta1, theta2, Completion::GramSchmidt)
}

/// Two-qubit gate with `D|φ±(θ₃)⟩|1⟩ = |φ±(θ₁)⟩|φ±(θ₂)⟩`.
pub fn d_gate_with(theta1: f64, theta2: f64, completion: Completion) -> Result<UnitaryGate> {
    let (col01, col11) = d_gate_columns(theta1, theta2)?;
    let fixed: Vec<Vec<C64>> = vec![col01.amplitudes().to_vec(), col11.amplitudes().to_vec()];
    let seeds: Vec<usize> = match completion {
        Completion::GramSchmidt => vec![0, 1, 2, 3],
        Completion::Reversed => vec![3, 2, 1, 0],
    };
    let mut free: Vec<Vec<C64>> = Vec::with_capacity(2);
    for seed in seeds {
        let mut v = vec![c(0.0); 4];
        v[seed] = c(1.0);
        for u in fixed.iter().chain(free.iter()) {
            let proj: C64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (vi, ui) in v.iter_mut().zip(u) {
                *vi -= proj * ui;
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            free.push(v.into_iter().map(|z| z / norm).collect());
        }
        if free.len() == 2 {
            break;
        }
    }
    if completion == Completion::Reversed {
        free.swap(0, 1);
    }
    let columns = [&free[0], &fixed[0], &free[1], &fixed[1]];
    UnitaryGate::new(DMatrix::from_fn(4, 4, |r, col| columns[col][r]))
}

/// Compressing unitary on `count` qubits mapping `|φ±(θ)⟩^⊗count` to
/// `|φ±(θ_count)⟩ ⊗ |1⟩^⊗(count−1)`.
///
/// Built as the adjoint of the expanding chain that applies
/// `D(θ_{count−j}, θ)` to particles `(1, j+1)` for `j = 1 … count−1`, with
/// particle 1 on the most significant qubit. The residue qubits end in
/// `|1⟩`, the ancilla value the D gate consumes.
pub fn d_chain(count: usize, theta: f64) -> Result<UnitaryGate> {
    d_chain_with(count, theta, Completion::GramSchmidt)
}

pub fn d_chain_with(count: usize, theta: f64, completion: Completion) -> Result<UnitaryGate> {
    if count < 2 {
        return Err(Error::OutOfRange(format!("D chain needs at least 2 qubits, got {count}")));
    }
    let theta = check_angle(theta)?;
    if theta == 0.0 {
        return Err(Error::OutOfRange("D chain needs θ > 0".into()));
    }
    let dim = 1usize << count;
    let first = count - 1;
    let mut expand = DMatrix::<C64>::identity(dim, dim);
    for j in 1..count {
        let d = d_gate_with(chain_angle(theta, (count - j) as u32)?, theta, completion)?;
        let step = d.embed(&[first, first - j], count)?;
        expand = step * expand;
    }
    Ok(UnitaryGate::new(expand)?.dagger())
}

/// Which system value switches on the probe rotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    OnZero,
    OnOne,
}

/// System-controlled `R_y(2ω)` on the probe.
pub fn controlled_probe_rotation(omega: f64, control: Control) -> UnitaryGate {
    let rot = ry(2.0 * omega);
    let r = rot.matrix();
    let mut m = DMatrix::<C64>::identity(4, 4);
    let base = match control {
        Control::OnZero => 0,
        Control::OnOne => 2,
    };
    for i in 0..2 {
        for j in 0..2 {
            m[(base + i, base + j)] = r[(i, j)];
        }
    }
    gate_unchecked(m)
}

/// `ω = arccos √[(1 − tᴹ)(1 + tᴺ) / ((1 + tᴹ)(1 − tᴺ))]`, principal branch.
pub fn reduction_omega(m: u32, n: u32, theta: f64) -> Result<f64> {
    if m == 0 || m >= n {
        return Err(Error::OutOfRange(format!("need 1 <= M < N, got M={m}, N={n}")));
    }
    let theta = check_angle(theta)?;
    if theta == 0.0 {
        return Err(Error::OutOfRange("reduction needs θ > 0".into()));
    }
    let t = overlap(theta);
    let gamma = success_gamma(m, n, theta)?;
    let cos_sq = gamma * (1.0 + t.powi(n as i32)) / (1.0 + t.powi(m as i32));
    Ok(cos_sq.clamp(0.0, 1.0).sqrt().acos())
}

/// Unitary reduction taking `|φ±(θ_M)⟩|P₀⟩` to
/// `√γ |φ±(θ_N)⟩|P₀⟩ − √(1−γ) |1⟩|P₁⟩` with `γ = γ_MN`.
///
/// The rotation fires when the system is `|1⟩`; only that assignment leaves
/// the `|0⟩` amplitude to be rescaled by `√γ`. The failure branch carries a
/// `−1` relative to the textbook form since `R_y(2ω)|P₀⟩ = cos ω|P₀⟩ − sin ω|P₁⟩`;
/// it is discarded on failure so the phase is unobservable.
pub fn reduction_u(m: u32, n: u32, theta: f64) -> Result<UnitaryGate> {
    Ok(controlled_probe_rotation(reduction_omega(m, n, theta)?, Control::OnOne))
}

/// Two-outcome measurement `M₀ = diag(sin θ, cos θ)`, `M₁ = diag(cos θ, sin θ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralizedMeasurement {
    theta: f64,
    m0: [f64; 2],
    m1: [f64; 2],
}

pub fn povm_pair(theta: f64) -> Result<GeneralizedMeasurement> {
    if !(0.0..=FRAC_PI_2).contains(&theta) {
        return Err(Error::OutOfRange(format!("POVM angle {theta} outside [0, π/2]")));
    }
    let (s, co) = theta.sin_cos();
    Ok(GeneralizedMeasurement { theta, m0: [s, co], m1: [co, s] })
}

impl GeneralizedMeasurement {
    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Diagonal of `M_m` on `|0⟩, |1⟩`.
    pub fn diagonal(&self, outcome: usize) -> [f64; 2] {
        if outcome == 0 {
            self.m0
        } else {
            self.m1
        }
    }

    pub fn kraus(&self, outcome: usize) -> DMatrix<C64> {
        let d = self.diagonal(outcome);
        real_matrix(2, &[d[0], 0.0, 0.0, d[1]])
    }

    /// Largest entry of `|M₀†M₀ + M₁†M₁ − I|`.
    pub fn completeness_deviation(&self) -> f64 {
        (0..2).map(|i| (self.m0[i].powi(2) + self.m1[i].powi(2) - 1.0).abs()).fold(0.0, f64::max)
    }
}

/// A generalized measurement realized as a system–probe unitary followed by
/// a probe readout in `{|P₀⟩, |P₁⟩}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DilatedMeasurement {
    pub unitary: UnitaryGate,
    pub probe_ready_state: StateVector,
}

/// Block-diagonal `R_y(−π + 2θ) ⊕ R_y(−2θ)`: the first block acts on the
/// probe when the system is `|0⟩`, the second when it is `|1⟩`.
pub fn dilate(povm: &GeneralizedMeasurement, theta: f64) -> Result<DilatedMeasurement> {
    if (povm.theta - theta).abs() > NORM_TOL {
        return Err(Error::OutOfRange(format!(
            "POVM was built for θ = {} but dilation requested θ = {theta}",
            povm.theta
        )));
    }
    let a = ry(-PI + 2.0 * theta);
    let b = ry(-2.0 * theta);
    let mut m = DMatrix::<C64>::zeros(4, 4);
    for i in 0..2 {
        for j in 0..2 {
            m[(i, j)] = a.matrix()[(i, j)];
            m[(2 + i, 2 + j)] = b.matrix()[(i, j)];
        }
    }
    Ok(DilatedMeasurement { unitary: UnitaryGate::new(m)?, probe_ready_state: StateVector::zero() })
}

impl DilatedMeasurement {
    /// Runs the dilation on a single-qubit state and returns, per probe
    /// outcome, its probability and the normalized system state (or `None`
    /// for a zero-probability branch).
    pub fn branches(&self, system: &StateVector) -> Result<[(f64, Option<StateVector>); 2]> {
        let joint = apply_gate(&system.tensor(&self.probe_ready_state), &self.unitary, &[1, 0])?;
        let branch = |probe: usize| -> (f64, Option<StateVector>) {
            let v = vec![joint.amplitude(probe), joint.amplitude(2 + probe)];
            let p = v.iter().map(|z| z.norm_sqr()).sum::<f64>();
            (p, if p > 1e-24 { StateVector::normalized(v).ok() } else { None })
        };
        Ok([branch(0), branch(1)])
    }
}

/// Bell basis labels; the discriminant indexes [`bell_basis`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BellState {
    PsiMinus = 0,
    PsiPlus = 1,
    PhiMinus = 2,
    PhiPlus = 3,
}

impl BellState {
    pub const ALL: [BellState; 4] = [BellState::PsiMinus, BellState::PsiPlus, BellState::PhiMinus, BellState::PhiPlus];

    pub fn from_index(i: usize) -> BellState {
        Self::ALL[i]
    }

    pub fn is_psi(self) -> bool {
        matches!(self, BellState::PsiMinus | BellState::PsiPlus)
    }
}

impl fmt::Display for BellState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BellState::PsiMinus => "psi-",
            BellState::PsiPlus => "psi+",
            BellState::PhiMinus => "phi-",
            BellState::PhiPlus => "phi+",
        })
    }
}

/// `|Ψ±⟩ = (|01⟩ ± |10⟩)/√2`, `|Φ±⟩ = (|00⟩ ± |11⟩)/√2`, ordered as
/// [`BellState::ALL`].
pub fn bell_basis() -> Vec<StateVector> {
    let h = FRAC_1_SQRT_2;
    [[0.0, h, -h, 0.0], [0.0, h, h, 0.0], [h, 0.0, 0.0, -h], [h, 0.0, 0.0, h]]
        .iter()
        .map(|a| StateVector::from_real(a).expect("unit vector"))
        .collect()
}

/// A polarization-controlled rotation of the location qubit and the five
/// elementary single-photon gates it factors into.
///
/// Polarization is the first (more significant) qubit, location the second.
#[derive(Debug, Clone, PartialEq)]
pub struct PclRotation {
    /// `R_y(ξ) ⊕ R_y(χ)` on `{|0P₀⟩, |0P₁⟩, |1P₀⟩, |1P₁⟩}`.
    pub direct: UnitaryGate,
    /// `[V₁, V₂, V₃, V₂, V₁]` in application order; by symmetry the matrix
    /// product reads the same either way.
    pub factors: [UnitaryGate; 5],
}

/// NOT on polarization when the location is `|P₁⟩`.
pub fn lcp_not() -> UnitaryGate {
    gate_unchecked(real_matrix(
        4,
        &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0],
    ))
}

/// NOT on location when the polarization is `|1⟩`.
pub fn pcl_not() -> UnitaryGate {
    gate_unchecked(real_matrix(
        4,
        &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0],
    ))
}

/// `R_y(ξ)` on polarization when the location is `|P₀⟩`, `R_y(−χ)` when `|P₁⟩`.
pub fn lcp_rotation(xi: f64, chi: f64) -> UnitaryGate {
    let p0 = real_matrix(2, &[1.0, 0.0, 0.0, 0.0]);
    let p1 = real_matrix(2, &[0.0, 0.0, 0.0, 1.0]);
    let m = ry(xi).matrix().kronecker(&p0) + ry(-chi).matrix().kronecker(&p1);
    gate_unchecked(m)
}

pub fn pcl_rotation(xi: f64, chi: f64) -> PclRotation {
    let mut m = DMatrix::<C64>::zeros(4, 4);
    let (a, b) = (ry(xi), ry(chi));
    for i in 0..2 {
        for j in 0..2 {
            m[(i, j)] = a.matrix()[(i, j)];
            m[(2 + i, 2 + j)] = b.matrix()[(i, j)];
        }
    }
    let (v1, v2, v3) = (lcp_not(), pcl_not(), lcp_rotation(xi, chi));
    PclRotation { direct: gate_unchecked(m), factors: [v1.clone(), v2.clone(), v3, v2, v1] }
}

impl PclRotation {
    /// `V₁V₂V₃V₂V₁` as a single matrix.
    pub fn product(&self) -> UnitaryGate {
        self.factors
            .iter()
            .skip(1)
            .fold(self.factors[0].clone(), |acc, f| f.then_after(&acc).expect("equal arity"))
    }
}

/// Angle of the state pair that is orthogonal: `π/4`.
pub const ORTHOGONAL_ANGLE: f64 = FRAC_PI_4;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statekit::{fidelity, partial_trace, DensityMatrix};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_6;

    fn close(a: &StateVector, b: &StateVector, tol: f64) -> bool {
        a.approx_eq_up_to_phase(b, tol)
    }

    #[test]
    fn phi_state_examples() {
        let plus = phi_state(FRAC_PI_4, Sign::Plus);
        assert!((plus.amplitude(0).re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((plus.amplitude(1).re - FRAC_1_SQRT_2).abs() < 1e-15);
        for s in [Sign::Plus, Sign::Minus] {
            assert!(close(&phi_state(0.0, s), &StateVector::one(), 1e-15));
        }
        for &th in &[0.1, 0.4, 0.7] {
            let ov = phi_state(th, Sign::Plus).inner(&phi_state(th, Sign::Minus)).unwrap();
            assert!((ov.re - (2.0 * th).cos()).abs() < 1e-14);
            let f = fidelity(&phi_state(th, Sign::Plus), &phi_state(th, Sign::Minus)).unwrap();
            assert!((f - (2.0 * th).cos().powi(2)).abs() < 1e-14);
        }
    }

    #[test]
    fn d_gate_law_and_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let (t1, t2) = (rng.random_range(0.01..FRAC_PI_4), rng.random_range(0.01..FRAC_PI_4));
            let t3 = merged_angle(t1, t2);
            assert!(((2.0 * t3).cos() - (2.0 * t1).cos() * (2.0 * t2).cos()).abs() < 1e-14);
            for completion in [Completion::GramSchmidt, Completion::Reversed] {
                let d = d_gate_with(t1, t2, completion).unwrap();
                assert!(d.deviation_from_unitary() < 1e-10);
                for s in [Sign::Plus, Sign::Minus] {
                    let input = phi_state(t3, s).tensor(&StateVector::one());
                    let target = phi_state(t1, s).tensor(&phi_state(t2, s));
                    let out = apply_gate(&input, &d, &[1, 0]).unwrap();
                    assert!(out.phase_distance(&target).unwrap() < 1e-10);
                    let back = apply_gate(&target, &d.dagger(), &[1, 0]).unwrap();
                    assert!(back.phase_distance(&input).unwrap() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn completions_differ_only_off_the_fixed_subspace() {
        let a = d_gate_with(0.3, 0.5, Completion::GramSchmidt).unwrap();
        let b = d_gate_with(0.3, 0.5, Completion::Reversed).unwrap();
        assert!(a.distance_up_to_phase(&b) > 1e-3);
        for col in [1, 3] {
            for row in 0..4 {
                assert!((a.matrix()[(row, col)] - b.matrix()[(row, col)]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn d_gate_edge_cases() {
        assert!((merged_angle(FRAC_PI_4, FRAC_PI_4) - FRAC_PI_4).abs() < 1e-15);
        assert!(d_gate(0.0, 0.0).is_err());
        assert!(d_gate(0.9, 0.1).is_err());
        assert!(d_gate(0.0, 0.3).is_ok());
    }

    #[test]
    fn d_chain_compresses() {
        for count in 2..=4 {
            for &theta in &[FRAC_PI_6, 0.2, FRAC_PI_4] {
                let chain = d_chain(count, theta).unwrap();
                assert!(chain.deviation_from_unitary() < 1e-10);
                for s in [Sign::Plus, Sign::Minus] {
                    let copies: Vec<StateVector> = (0..count).map(|_| phi_state(theta, s)).collect();
                    let input = crate::statekit::tensor_all(&copies).unwrap();
                    let targets: Vec<usize> = (0..count).rev().collect();
                    let out = apply_gate(&input, &chain, &targets).unwrap();
                    let mut expect = phi_state(chain_angle(theta, count as u32).unwrap(), s);
                    for _ in 1..count {
                        expect = expect.tensor(&StateVector::one());
                    }
                    assert!(out.phase_distance(&expect).unwrap() < 1e-10, "count {count} θ {theta}");
                }
            }
        }
        assert!(d_chain(1, 0.3).is_err());
    }

    #[test]
    fn d_chain_two_reduces_first_qubit() {
        let chain = d_chain(2, FRAC_PI_6).unwrap();
        let input = phi_state(FRAC_PI_6, Sign::Plus).tensor(&phi_state(FRAC_PI_6, Sign::Plus));
        let out = apply_gate(&input, &chain, &[1, 0]).unwrap();
        let first = partial_trace(&DensityMatrix::from_pure(&out), &[1]).unwrap();
        let theta2 = (0.25f64).acos() / 2.0;
        let expect = DensityMatrix::from_pure(&phi_state(theta2, Sign::Plus));
        assert!(crate::statekit::trace_distance(&first, &expect).unwrap() < 1e-10);
    }

    #[test]
    fn reduction_identity_at_orthogonal_angle() {
        assert_eq!(reduction_omega(1, 2, FRAC_PI_4).unwrap(), 0.0);
        let u = reduction_u(1, 2, FRAC_PI_4).unwrap();
        assert!(u.distance_up_to_phase(&UnitaryGate::identity(2)) < 1e-15);
    }

    fn reduction_branches(u: &UnitaryGate, input_theta: f64, s: Sign) -> (f64, StateVector, StateVector) {
        let joint = apply_gate(&phi_state(input_theta, s).tensor(&StateVector::zero()), u, &[1, 0]).unwrap();
        let ok = vec![joint.amplitude(0), joint.amplitude(2)];
        let fail = vec![joint.amplitude(1), joint.amplitude(3)];
        let p = ok.iter().map(|z| z.norm_sqr()).sum::<f64>();
        (p, StateVector::normalized(ok).unwrap(), StateVector::normalized(fail).unwrap())
    }

    #[test]
    fn reduction_success_branch() {
        let (p, ok, fail) = reduction_branches(&reduction_u(1, 2, FRAC_PI_6).unwrap(), FRAC_PI_6, Sign::Minus);
        assert!((p - 2.0 / 3.0).abs() < 1e-10);
        let theta2 = chain_angle(FRAC_PI_6, 2).unwrap();
        assert!(ok.phase_distance(&phi_state(theta2, Sign::Minus)).unwrap() < 1e-10);
        assert!(fail.phase_distance(&StateVector::one()).unwrap() < 1e-10);
    }

    #[test]
    fn reduction_control_on_zero_breaks_the_relation() {
        let omega = reduction_omega(1, 2, FRAC_PI_6).unwrap();
        let wrong = controlled_probe_rotation(omega, Control::OnZero);
        let (_, ok, _) = reduction_branches(&wrong, FRAC_PI_6, Sign::Plus);
        let theta2 = chain_angle(FRAC_PI_6, 2).unwrap();
        assert!(ok.phase_distance(&phi_state(theta2, Sign::Plus)).unwrap() > 1e-3);
    }

    #[test]
    fn reduction_random_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let n = rng.random_range(2..7u32);
            let m = rng.random_range(1..n);
            let theta = rng.random_range(0.02..FRAC_PI_4);
            let u = reduction_u(m, n, theta).unwrap();
            assert!(u.deviation_from_unitary() < 1e-10);
            for s in [Sign::Plus, Sign::Minus] {
                let (p, ok, _) = reduction_branches(&u, chain_angle(theta, m).unwrap(), s);
                assert!((p - success_gamma(m, n, theta).unwrap()).abs() < 1e-10);
                assert!(ok.phase_distance(&phi_state(chain_angle(theta, n).unwrap(), s)).unwrap() < 1e-10);
            }
        }
        assert!(reduction_u(2, 2, 0.3).is_err());
        assert!(reduction_u(1, 2, 0.0).is_err());
    }

    #[test]
    fn povm_examples() {
        let p = povm_pair(FRAC_PI_4).unwrap();
        assert!((p.diagonal(0)[0] - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((p.diagonal(0)[1] - p.diagonal(1)[1]).abs() < 1e-15);
        let z = povm_pair(0.0).unwrap();
        assert_eq!(z.diagonal(0), [0.0, 1.0]);
        for th in [0.0, 0.3, 1.0, FRAC_PI_2] {
            assert!(povm_pair(th).unwrap().completeness_deviation() < 1e-15);
        }
        assert!(povm_pair(2.0).is_err());
    }

    #[test]
    fn dilation_examples() {
        let pair = povm_pair(FRAC_PI_4).unwrap();
        let dil = dilate(&pair, FRAC_PI_4).unwrap();
        let b = dil.branches(&StateVector::zero()).unwrap();
        assert!((b[0].0 - 0.5).abs() < 1e-12);
        let pair = povm_pair(FRAC_PI_6).unwrap();
        let dil = dilate(&pair, FRAC_PI_6).unwrap();
        assert!(dil.unitary.deviation_from_unitary() < 1e-10);
        let b = dil.branches(&StateVector::one()).unwrap();
        assert!((b[0].0 - 0.75).abs() < 1e-12);
        assert!(dilate(&pair, 0.2).is_err());
    }

    #[test]
    fn bell_basis_relations() {
        let basis = bell_basis();
        assert!(crate::statekit::basis_deviation(&basis).unwrap() < 1e-15);
        let flipped = apply_gate(&basis[BellState::PsiPlus as usize], &pauli_x(), &[1]).unwrap();
        assert!(flipped.phase_distance(&basis[BellState::PhiPlus as usize]).unwrap() < 1e-15);
        let sum: Vec<C64> = basis[BellState::PsiPlus as usize]
            .amplitudes()
            .iter()
            .zip(basis[BellState::PsiMinus as usize].amplitudes())
            .map(|(a, b)| (a + b) * FRAC_1_SQRT_2)
            .collect();
        assert!(StateVector::new(sum).unwrap().phase_distance(&StateVector::basis(2, 1)).unwrap() < 1e-15);
    }

    #[test]
    fn pcl_decomposition() {
        let id = pcl_rotation(0.0, 0.0);
        assert!(id.direct.distance_up_to_phase(&UnitaryGate::identity(2)) < 1e-15);
        assert!(id.product().distance_up_to_phase(&UnitaryGate::identity(2)) < 1e-15);
        let flip = pcl_rotation(PI, 0.0);
        assert!(flip.product().distance_up_to_phase(&flip.direct) < 1e-10);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let v = pcl_rotation(rng.random_range(-PI..PI), rng.random_range(-PI..PI));
            assert!(v.product().distance_up_to_phase(&v.direct) < 1e-10);
        }
    }
}
