use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

use nalgebra::DMatrix;
use rand::Rng;
use serde::Serialize;

use crate::analytics::{chain_angle, one_minus_overlap_pow, overlap};
use crate::error::{Error, Result};
use crate::gates::{d_gate_with, pauli_x, Completion, phi_state, povm_pair, ry, GeneralizedMeasurement, Sign};
use crate::statekit::{apply_gate, apply_generalized_measurement, DensityMatrix, StateVector, C64};

/// Register positions of the three resource qubits.
pub const QUBIT_S: usize = 2;
pub const QUBIT_A: usize = 1;
pub const QUBIT_C: usize = 0;

/// A three-qubit resource `(S, A, Cⱼ)` for step `j`, with `S` most significant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResourceState {
    #[serde(skip)]
    pub state: StateVector,
    /// `(−1)^(k+p+t)` of the preparation outcomes; `+1` for the ideal state.
    pub parity: i8,
    pub j: u32,
    /// Probability of the `+1` parity class, `sin²(2θ_{N−j+1})/2`.
    pub p1: f64,
    /// Probability of the `−1` parity class, `(1 + cos²2θ_{N−j+1})/2`.
    pub p_minus1: f64,
    /// Preparation outcomes `[t, k, p]` on `[S, A, Cⱼ]`, when sampled.
    pub outcomes: Option<[u8; 3]>,
}

pub(crate) fn check_step(j: u32, n: u32, theta: f64) -> Result<()> {
    if j == 0 || j >= n {
        return Err(Error::OutOfRange(format!("step index {j} outside 1..={}", n.saturating_sub(1))));
    }
    if theta.is_nan() || theta <= 0.0 {
        return Err(Error::OutOfRange("protocol needs θ > 0".into()));
    }
    crate::analytics::check_angle(theta).map(|_| ())
}

/// Angles `(θ_{N−j+1}, θ_{N−j}, θ₁)` used by step `j`.
pub fn step_angles(j: u32, n: u32, theta: f64) -> Result<(f64, f64, f64)> {
    check_step(j, n, theta)?;
    Ok((chain_angle(theta, n - j + 1)?, chain_angle(theta, n - j)?, chain_angle(theta, 1)?))
}

/// `(p₁, p₋₁)` for step `j`.
pub fn branch_probabilities(j: u32, n: u32, theta: f64) -> Result<(f64, f64)> {
    check_step(j, n, theta)?;
    // 1 − cos²2θ_{N−j+1} = 1 − t^{2(N−j+1)}
    let sin_sq = one_minus_overlap_pow(theta, 2 * (n - j + 1));
    Ok((sin_sq / 2.0, 1.0 - sin_sq / 2.0))
}

/// `(|φ₀ʲ⟩, |φ₁ʲ⟩)` on `(A, Cⱼ)`: `Dⱼ(θ_{N−j}, θ₁)|i⟩|1⟩`.
pub fn port_states(j: u32, n: u32, theta: f64) -> Result<(StateVector, StateVector)> {
    port_states_with(j, n, theta, Completion::default())
}

/// [`port_states`] computed by running a D gate with the given completion.
pub fn port_states_with(j: u32, n: u32, theta: f64, completion: Completion) -> Result<(StateVector, StateVector)> {
    let (_, a, c) = step_angles(j, n, theta)?;
    let d = d_gate_with(a, c, completion)?;
    let phi0 = apply_gate(&StateVector::basis(2, 0b01), &d, &[1, 0])?;
    let phi1 = apply_gate(&StateVector::basis(2, 0b11), &d, &[1, 0])?;
    Ok((phi0, phi1))
}

fn combine(terms: &[(f64, &StateVector, &StateVector)]) -> Result<StateVector> {
    let dim = terms[0].1.dim() * terms[0].2.dim();
    let mut amps = vec![C64::new(0.0, 0.0); dim];
    for (coef, a, b) in terms {
        for (slot, z) in amps.iter_mut().zip(a.tensor(b).amplitudes()) {
            *slot += z * *coef;
        }
    }
    StateVector::normalized(amps)
}

/// `(|0⟩_S|φ₁ʲ⟩ − |1⟩_S|φ₀ʲ⟩)/√2`.
pub fn ideal_resource(j: u32, n: u32, theta: f64) -> Result<ResourceState> {
    ideal_resource_with(j, n, theta, Completion::default())
}

pub fn ideal_resource_with(j: u32, n: u32, theta: f64, completion: Completion) -> Result<ResourceState> {
    let (phi0, phi1) = port_states_with(j, n, theta, completion)?;
    let state = combine(&[
        (FRAC_1_SQRT_2, &StateVector::zero(), &phi1),
        (-FRAC_1_SQRT_2, &StateVector::one(), &phi0),
    ])?;
    let (p1, p_minus1) = branch_probabilities(j, n, theta)?;
    Ok(ResourceState { state, parity: 1, j, p1, p_minus1, outcomes: None })
}

/// The `−1` parity class: `κ((tⱼ/hⱼ)|0⟩_S|φ₀ʲ⟩ − (hⱼ/tⱼ)|1⟩_S|φ₁ʲ⟩)` with
/// `hⱼ = cos θ_{N−j+1}`, `tⱼ = sin θ_{N−j+1}`.
pub fn odd_parity_resource(j: u32, n: u32, theta: f64) -> Result<ResourceState> {
    let (theta_in, _, _) = step_angles(j, n, theta)?;
    let (phi0, phi1) = port_states(j, n, theta)?;
    let (t, h) = theta_in.sin_cos();
    let kappa = kappa(j, n, theta)?;
    let state = combine(&[
        (kappa * t / h, &StateVector::zero(), &phi0),
        (-kappa * h / t, &StateVector::one(), &phi1),
    ])?;
    let (p1, p_minus1) = branch_probabilities(j, n, theta)?;
    Ok(ResourceState { state, parity: -1, j, p1, p_minus1, outcomes: None })
}

/// `κ = √[(1 − cos²2θ_{N−j+1}) / (2(1 + cos²2θ_{N−j+1}))]`.
pub fn kappa(j: u32, n: u32, theta: f64) -> Result<f64> {
    let (p1, p_minus1) = branch_probabilities(j, n, theta)?;
    Ok((p1 / (2.0 * p_minus1)).sqrt())
}

/// `(|000⟩ + |111⟩)/√2`.
pub fn ghz_state() -> StateVector {
    let mut amps = vec![0.0; 8];
    amps[0] = FRAC_1_SQRT_2;
    amps[7] = FRAC_1_SQRT_2;
    StateVector::from_real(&amps).expect("unit vector")
}

/// Everything needed to turn a GHZ state into the step-`j` resource.
#[derive(Debug, Clone)]
pub(crate) struct Preparation {
    j: u32,
    p1: f64,
    p_minus1: f64,
    rotated: StateVector,
    /// POVMs on `[S, A, Cⱼ]`.
    povms: [GeneralizedMeasurement; 3],
}

const TARGETS: [usize; 3] = [QUBIT_S, QUBIT_A, QUBIT_C];

impl Preparation {
    pub(crate) fn new(j: u32, n: u32, theta: f64) -> Result<Self> {
        let (s, a, c) = step_angles(j, n, theta)?;
        let (p1, p_minus1) = branch_probabilities(j, n, theta)?;
        Ok(Self { j, p1, p_minus1, rotated: rotate_ghz(&ghz_state())?, povms: [povm_pair(s)?, povm_pair(a)?, povm_pair(c)?] })
    }

    fn finish(&self, state: StateVector, outcomes: [u8; 3]) -> Result<ResourceState> {
        let mut state = state;
        for (q, &m) in TARGETS.iter().zip(&outcomes) {
            if m == 1 {
                state = apply_gate(&state, &pauli_x(), &[*q])?;
            }
        }
        let parity = if outcomes.iter().map(|&m| m as u32).sum::<u32>() % 2 == 0 { 1 } else { -1 };
        Ok(ResourceState { state, parity, j: self.j, p1: self.p1, p_minus1: self.p_minus1, outcomes: Some(outcomes) })
    }

    pub(crate) fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ResourceState> {
        let mut state = self.rotated.clone();
        let mut outcomes = [0u8; 3];
        for (i, (&q, povm)) in TARGETS.iter().zip(&self.povms).enumerate() {
            let out = apply_generalized_measurement(&state, povm, q, rng)?;
            outcomes[i] = out.label as u8;
            state = out.post_state;
        }
        self.finish(state, outcomes)
    }

    /// The eight Kraus operators (`σ_x` corrections included) of the
    /// preparation with the parity record discarded, acting on `(S, A, Cⱼ)`.
    pub(crate) fn kraus_operators(&self) -> Vec<DMatrix<C64>> {
        let rotation = ry(FRAC_PI_2).matrix().kronecker(ry(-FRAC_PI_2).matrix()).kronecker(ry(-FRAC_PI_2).matrix());
        let x = pauli_x();
        let id = DMatrix::<C64>::identity(2, 2);
        (0..8u8)
            .map(|bits| {
                let outcomes = [bits >> 2 & 1, bits >> 1 & 1, bits & 1];
                let flips = outcomes
                    .iter()
                    .map(|&m| if m == 1 { x.matrix().clone() } else { id.clone() })
                    .reduce(|a, b| a.kronecker(&b))
                    .expect("three factors");
                let diag = self
                    .povms
                    .iter()
                    .zip(&outcomes)
                    .map(|(p, &m)| p.kraus(m as usize))
                    .reduce(|a, b| a.kronecker(&b))
                    .expect("three factors");
                flips * diag * &rotation
            })
            .collect()
    }

    /// All eight outcome branches with their probabilities; zero-probability
    /// branches are omitted.
    pub(crate) fn branches(&self) -> Result<Vec<(f64, ResourceState)>> {
        let mut out = Vec::with_capacity(8);
        for bits in 0..8u8 {
            let outcomes = [bits >> 2 & 1, bits >> 1 & 1, bits & 1];
            let mut amps: Vec<C64> = self.rotated.amplitudes().to_vec();
            for ((&q, povm), &m) in TARGETS.iter().zip(&self.povms).zip(&outcomes) {
                let d = povm.diagonal(m as usize);
                for (idx, z) in amps.iter_mut().enumerate() {
                    *z *= d[idx >> q & 1];
                }
            }
            let p: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
            if p < 1e-15 {
                continue;
            }
            out.push((p, self.finish(StateVector::normalized(amps)?, outcomes)?));
        }
        Ok(out)
    }
}

/// `R_y^S(π/2) ⊗ R_y^A(−π/2) ⊗ R_y^C(−π/2)` applied to `state`.
pub fn rotate_ghz(state: &StateVector) -> Result<StateVector> {
    let s = apply_gate(state, &ry(FRAC_PI_2), &[QUBIT_S])?;
    let a = apply_gate(&s, &ry(-FRAC_PI_2), &[QUBIT_A])?;
    apply_gate(&a, &ry(-FRAC_PI_2), &[QUBIT_C])
}

/// Samples the GHZ-based preparation of the step-`j` resource: local
/// rotations, one generalized measurement per qubit (angles `θ_{N−j+1}`,
/// `θ_{N−j}`, `θ₁` on `S`, `A`, `Cⱼ`), and `σ_x` on every qubit whose
/// outcome was 1.
pub fn prepare_from_ghz<R: Rng + ?Sized>(j: u32, n: u32, theta: f64, rng: &mut R) -> Result<ResourceState> {
    Preparation::new(j, n, theta)?.sample(rng)
}

/// Every outcome of [`prepare_from_ghz`] with its probability.
pub fn preparation_branches(j: u32, n: u32, theta: f64) -> Result<Vec<(f64, ResourceState)>> {
    Preparation::new(j, n, theta)?.branches()
}

/// The resource after the two preparation paths are merged without
/// recording the parity: `p₁|ξ₁⟩⟨ξ₁| + p₋₁|ξ₋₁⟩⟨ξ₋₁|`.
pub fn resource_mixture(j: u32, n: u32, theta: f64) -> Result<DensityMatrix> {
    let parts: Vec<(f64, StateVector)> =
        preparation_branches(j, n, theta)?.into_iter().map(|(p, r)| (p, r.state)).collect();
    DensityMatrix::mixture(&parts)
}

/// Residual left on `(A, Cⱼ)` after a `Φ⁻` outcome with the ideal resource:
/// `(±1/sin 2θ_in)(|φ±φ±⟩ − cos 2θ_in |φ∓φ∓⟩)`, `θ_in = θ_{N−j+1}`, where the
/// factors are `φ(θ_{N−j})` on `A` and `φ(θ₁)` on `Cⱼ`.
pub fn alpha_state(j: u32, n: u32, theta: f64, sign: Sign) -> Result<StateVector> {
    let (theta_in, a, c) = step_angles(j, n, theta)?;
    let same = phi_state(a, sign).tensor(&phi_state(c, sign));
    let other = phi_state(a, sign.flipped()).tensor(&phi_state(c, sign.flipped()));
    let t = overlap(theta_in);
    let amps = same.amplitudes().iter().zip(other.amplitudes()).map(|(x, y)| (x - y * t) * sign.value()).collect();
    StateVector::normalized(amps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::{d_gate_columns, pauli_z};
    use crate::statekit::{fidelity, partial_trace, schmidt_coefficients, trace_distance};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_4, FRAC_PI_6};

    #[test]
    fn port_states_at_orthogonal_angle() {
        let (phi0, phi1) = port_states(1, 2, FRAC_PI_4).unwrap();
        let h = FRAC_1_SQRT_2;
        assert!(phi1.phase_distance(&StateVector::from_real(&[h, 0.0, 0.0, h]).unwrap()).unwrap() < 1e-12);
        assert!(phi0.phase_distance(&StateVector::from_real(&[0.0, h, h, 0.0]).unwrap()).unwrap() < 1e-12);
    }

    #[test]
    fn port_states_are_orthogonal_and_zz_symmetric() {
        for n in 2..=6 {
            for j in 1..n {
                for &theta in &[0.05, 0.3, FRAC_PI_6, FRAC_PI_4] {
                    let (phi0, phi1) = port_states(j, n, theta).unwrap();
                    assert!(phi0.inner(&phi1).unwrap().norm() < 1e-12);
                    for (i, phi) in [(0, &phi0), (1, &phi1)] {
                        let zz = apply_gate(&apply_gate(phi, &pauli_z(), &[1]).unwrap(), &pauli_z(), &[0]).unwrap();
                        let expect = if i == 1 { 1.0 } else { -1.0 };
                        let diff: f64 =
                            zz.amplitudes().iter().zip(phi.amplitudes()).map(|(a, b)| (a - b * expect).norm()).sum();
                        assert!(diff < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn ghz_marginals() {
        let rho = DensityMatrix::from_pure(&ghz_state());
        for q in 0..3 {
            let r = partial_trace(&rho, &[q]).unwrap();
            assert!(trace_distance(&r, &DensityMatrix::maximally_mixed(1)).unwrap() < 1e-12);
        }
        for cut in [[0usize], [1], [2]] {
            let c = schmidt_coefficients(&ghz_state(), &cut).unwrap();
            assert!((c[0] - FRAC_1_SQRT_2).abs() < 1e-12 && (c[1] - FRAC_1_SQRT_2).abs() < 1e-12);
        }
    }

    #[test]
    fn branch_probability_examples() {
        let (p1, pm) = branch_probabilities(1, 2, FRAC_PI_4).unwrap();
        assert!((p1 - 0.5).abs() < 1e-15 && (pm - 0.5).abs() < 1e-15);
        let (p1, pm) = branch_probabilities(1, 2, FRAC_PI_6).unwrap();
        assert!((p1 - 15.0 / 32.0).abs() < 1e-15);
        assert!((p1 + pm - 1.0).abs() < 1e-15);
    }

    #[test]
    fn preparation_matches_parity_classes() {
        for n in 2..=6 {
            for j in 1..n {
                for &theta in &[0.1, FRAC_PI_6, 0.7, FRAC_PI_4] {
                    let even = ideal_resource(j, n, theta).unwrap();
                    let odd = odd_parity_resource(j, n, theta).unwrap();
                    let (mut p_even, mut p_odd) = (0.0, 0.0);
                    for (p, r) in preparation_branches(j, n, theta).unwrap() {
                        let target = if r.parity == 1 { &even } else { &odd };
                        assert!(r.state.phase_distance(&target.state).unwrap() < 1e-9, "n={n} j={j} θ={theta}");
                        if r.parity == 1 {
                            p_even += p;
                        } else {
                            p_odd += p;
                        }
                    }
                    assert!((p_even - even.p1).abs() < 1e-10);
                    assert!((p_odd - even.p_minus1).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn sampled_preparation_is_one_of_the_classes() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let even = ideal_resource(2, 4, 0.4).unwrap();
        let odd = odd_parity_resource(2, 4, 0.4).unwrap();
        for _ in 0..50 {
            let r = prepare_from_ghz(2, 4, 0.4, &mut rng).unwrap();
            let target = if r.parity == 1 { &even } else { &odd };
            assert!(r.state.approx_eq_up_to_phase(&target.state, 1e-9));
            assert!(r.outcomes.is_some());
        }
    }

    #[test]
    fn mixture_is_valid() {
        let rho = resource_mixture(1, 3, FRAC_PI_6).unwrap();
        assert!((rho.trace().re - 1.0).abs() < 1e-12);
        assert!(rho.purity() < 1.0);
    }

    #[test]
    fn alpha_is_orthogonal_to_flipped_product() {
        for &theta in &[0.1, 0.3, 0.6, FRAC_PI_4] {
            for sign in [Sign::Plus, Sign::Minus] {
                let alpha = alpha_state(1, 2, theta, sign).unwrap();
                let (_, a, c) = step_angles(1, 2, theta).unwrap();
                let flipped = phi_state(a, sign.flipped()).tensor(&phi_state(c, sign.flipped()));
                assert!(fidelity(&alpha, &flipped).unwrap() < 1e-20);
            }
        }
    }

    #[test]
    fn port_states_ignore_completion() {
        let (_, th_a, th_c) = step_angles(1, 3, 0.4).unwrap();
        let (c0, c1) = d_gate_columns(th_a, th_c).unwrap();
        for completion in [Completion::GramSchmidt, Completion::Reversed] {
            let (b0, b1) = port_states_with(1, 3, 0.4, completion).unwrap();
            assert!(b0.phase_distance(&c0).unwrap() < 1e-12 && b1.phase_distance(&c1).unwrap() < 1e-12);
        }
    }
}
