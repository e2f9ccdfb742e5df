use nalgebra::DMatrix;
use rand::Rng;

use super::density::bra_projector;
use super::gate::{check_subset, check_targets, embed_operator};
use super::state::StateVector;
use super::{C64, EIGEN_TOL, NORM_TOL, SAMPLING_FLOOR};
use crate::error::{Error, Result};
use crate::gates::GeneralizedMeasurement;

/// One sampled measurement branch.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementOutcome {
    /// Index into the basis (or Kraus pair) that was realized.
    pub label: usize,
    pub probability: f64,
    /// Full register after collapse, renormalized.
    pub post_state: StateVector,
    /// Unmeasured qubits after a basis projection, compacted in increasing
    /// index order. `None` when every qubit was measured or for Kraus
    /// measurements, which leave the register size unchanged.
    pub residual: Option<StateVector>,
}

/// Maximum deviation of the Gram matrix of `basis` from the identity; also
/// fails when the basis does not have `2^k` elements.
pub fn basis_deviation(basis: &[StateVector]) -> Result<f64> {
    let first = basis.first().ok_or(Error::IncompleteBasis { deviation: 1.0 })?;
    if basis.len() != first.dim() {
        return Err(Error::IncompleteBasis { deviation: 1.0 });
    }
    let mut dev: f64 = 0.0;
    for (i, a) in basis.iter().enumerate() {
        for (j, b) in basis.iter().enumerate() {
            let expect = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((a.inner(b)? - C64::new(expect, 0.0)).norm());
        }
    }
    Ok(dev)
}

/// Born probabilities of every basis element on `targets`, together with the
/// unnormalized residual on the remaining qubits.
pub fn basis_branches(
    state: &StateVector,
    basis: &[StateVector],
    targets: &[usize],
) -> Result<Vec<(f64, nalgebra::DVector<C64>)>> {
    let deviation = basis_deviation(basis)?;
    if deviation > EIGEN_TOL {
        return Err(Error::IncompleteBasis { deviation });
    }
    check_targets(targets, basis[0].qubit_count(), state.qubit_count())?;
    Ok(basis
        .iter()
        .map(|b| {
            let residual = bra_projector(b, targets, state.qubit_count()) * state.as_dvector();
            (residual.norm_squared(), residual)
        })
        .collect())
}

pub fn outcome_probabilities(state: &StateVector, basis: &[StateVector], targets: &[usize]) -> Result<Vec<f64>> {
    Ok(basis_branches(state, basis, targets)?.into_iter().map(|(p, _)| p).collect())
}

/// Draws an index from `probs`, skipping entries below the sampling floor and
/// renormalizing over the rest.
pub fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> Result<usize> {
    let total: f64 = probs.iter().filter(|&&p| p >= SAMPLING_FLOOR).sum();
    if total <= 0.0 {
        return Err(Error::ZeroProbability);
    }
    let mut u = rng.random::<f64>() * total;
    let mut last = None;
    for (i, &p) in probs.iter().enumerate() {
        if p < SAMPLING_FLOOR {
            continue;
        }
        last = Some(i);
        if u < p {
            return Ok(i);
        }
        u -= p;
    }
    last.ok_or(Error::ZeroProbability)
}

/// Projective measurement of `targets` in an orthonormal `basis`.
///
/// `targets[0]` is the most significant qubit of each basis vector.
pub fn measure_in_basis<R: Rng + ?Sized>(
    state: &StateVector,
    basis: &[StateVector],
    targets: &[usize],
    rng: &mut R,
) -> Result<MeasurementOutcome> {
    let branches = basis_branches(state, basis, targets)?;
    let probs: Vec<f64> = branches.iter().map(|(p, _)| *p).collect();
    let label = sample_index(&probs, rng)?;
    let (probability, residual) = &branches[label];
    let residual = if residual.len() >= 2 {
        Some(StateVector::from_dvector_normalizing(residual.clone())?)
    } else {
        None
    };
    let post_state = collapse(state, &basis[label], targets)?;
    Ok(MeasurementOutcome { label, probability: *probability, post_state, residual })
}

fn collapse(state: &StateVector, b: &StateVector, targets: &[usize]) -> Result<StateVector> {
    let v = b.as_dvector();
    let projector: DMatrix<C64> = v * v.adjoint();
    let full = embed_operator(&projector, targets, state.qubit_count());
    StateVector::from_dvector_normalizing(full * state.as_dvector())
}

/// Probabilities `⟨ψ|Mₘ†Mₘ|ψ⟩` of both Kraus outcomes on `target`.
pub fn kraus_probabilities(state: &StateVector, pair: &GeneralizedMeasurement, target: usize) -> Result<[f64; 2]> {
    check_subset(&[target], state.qubit_count())?;
    let deviation = pair.completeness_deviation();
    if deviation > NORM_TOL {
        return Err(Error::IncompleteKraus { deviation });
    }
    let branch = |m: &DMatrix<C64>| (embed_operator(m, &[target], state.qubit_count()) * state.as_dvector()).norm_squared();
    Ok([branch(&pair.kraus(0)), branch(&pair.kraus(1))])
}

/// Samples the two-outcome generalized measurement on `target` and returns
/// `Mₘ|ψ⟩/‖Mₘ|ψ⟩‖`.
pub fn apply_generalized_measurement<R: Rng + ?Sized>(
    state: &StateVector,
    pair: &GeneralizedMeasurement,
    target: usize,
    rng: &mut R,
) -> Result<MeasurementOutcome> {
    let probs = kraus_probabilities(state, pair, target)?;
    let label = sample_index(&probs, rng)?;
    let post = embed_operator(&pair.kraus(label), &[target], state.qubit_count()) * state.as_dvector();
    Ok(MeasurementOutcome {
        label,
        probability: probs[label],
        post_state: StateVector::from_dvector_normalizing(post)?,
        residual: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::{self, BellState};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_4, FRAC_PI_6};

    #[test]
    fn bell_eigenstate_is_certain() {
        let basis = gates::bell_basis();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let psi_minus = basis[BellState::PsiMinus as usize].clone();
        for _ in 0..20 {
            let out = measure_in_basis(&psi_minus, &basis, &[1, 0], &mut rng).unwrap();
            assert_eq!(out.label, BellState::PsiMinus as usize);
            assert!((out.probability - 1.0).abs() < 1e-12);
            assert!(out.residual.is_none());
        }
    }

    #[test]
    fn ket01_splits_between_psi_states() {
        let basis = gates::bell_basis();
        let probs = outcome_probabilities(&StateVector::basis(2, 1), &basis, &[1, 0]).unwrap();
        assert!((probs[BellState::PsiPlus as usize] - 0.5).abs() < 1e-12);
        assert!((probs[BellState::PsiMinus as usize] - 0.5).abs() < 1e-12);
        assert!(probs[BellState::PhiPlus as usize].abs() < 1e-12);
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn residual_tracks_remaining_qubits() {
        // |Ψ⁻⟩ on qubits (2,1) with |1⟩ on qubit 0.
        let basis = gates::bell_basis();
        let s = basis[BellState::PsiMinus as usize].tensor(&StateVector::one());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = measure_in_basis(&s, &basis, &[2, 1], &mut rng).unwrap();
        assert_eq!(out.label, BellState::PsiMinus as usize);
        assert!(out.residual.unwrap().approx_eq_up_to_phase(&StateVector::one(), 1e-12));
    }

    #[test]
    fn rejects_incomplete_basis() {
        let basis = vec![StateVector::zero(), StateVector::zero()];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            measure_in_basis(&StateVector::zero(), &basis, &[0], &mut rng),
            Err(Error::IncompleteBasis { .. })
        ));
        let short = vec![StateVector::zero()];
        assert!(outcome_probabilities(&StateVector::zero(), &short, &[0]).is_err());
    }

    #[test]
    fn kraus_balanced_at_pi_over_4() {
        let pair = gates::povm_pair(FRAC_PI_4).unwrap();
        let p = kraus_probabilities(&StateVector::zero(), &pair, 0).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn kraus_on_one() {
        let pair = gates::povm_pair(FRAC_PI_6).unwrap();
        let p = kraus_probabilities(&StateVector::one(), &pair, 0).unwrap();
        assert!((p[0] - FRAC_PI_6.cos().powi(2)).abs() < 1e-12);
        assert!((p[0] + p[1] - 1.0).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        loop {
            let out = apply_generalized_measurement(&StateVector::one(), &pair, 0, &mut rng).unwrap();
            if out.label == 0 {
                assert!(out.post_state.approx_eq_up_to_phase(&StateVector::one(), 1e-12));
                break;
            }
        }
    }

    #[test]
    fn zero_probability_branch_never_sampled() {
        // θ = 0: M₀ = diag(0, 1) annihilates |0⟩.
        let pair = gates::povm_pair(0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let out = apply_generalized_measurement(&StateVector::zero(), &pair, 0, &mut rng).unwrap();
            assert_eq!(out.label, 1);
        }
        assert_eq!(sample_index(&[0.0, 1e-13], &mut rng), Err(Error::ZeroProbability));
    }
}
