use nalgebra::DMatrix;

use super::density::{hermitian_eigenvalues, hermiticity_deviation, DensityMatrix};
use super::gate::check_subset;
use super::state::StateVector;
use super::{C64, NORM_TOL};
use crate::error::{Error, Result};

/// Squared overlap `|⟨ψ|φ⟩|²`.
pub fn fidelity(psi: &StateVector, phi: &StateVector) -> Result<f64> {
    Ok(psi.inner(phi)?.norm_sqr().min(1.0))
}

/// `Tr|A − B|`, summed over the eigenvalues of the Hermitian difference.
///
/// Orthogonal pure states sit at distance 2 under this normalization.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    trace_norm_of_difference(a.entries(), b.entries())
}

/// Trace norm of `A − B` for arbitrary Hermitian operators, including
/// unnormalized measurement branches.
pub fn trace_norm_of_difference(a: &DMatrix<C64>, b: &DMatrix<C64>) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch { left: a.nrows(), right: b.nrows() });
    }
    let diff = a - b;
    let deviation = hermiticity_deviation(&diff);
    if deviation > NORM_TOL {
        return Err(Error::NotHermitian { deviation });
    }
    Ok(hermitian_eigenvalues(&diff).iter().map(|l| l.abs()).sum())
}

fn reshape_for_cut(psi: &StateVector, cut: &[usize]) -> Result<(DMatrix<C64>, Vec<usize>)> {
    check_subset(cut, psi.qubit_count())?;
    if cut.is_empty() || cut.len() == psi.qubit_count() {
        return Err(Error::InvalidBipartition(format!(
            "cut {cut:?} of {} qubits leaves one side empty",
            psi.qubit_count()
        )));
    }
    let mut side_a: Vec<usize> = cut.to_vec();
    side_a.sort_unstable_by(|x, y| y.cmp(x));
    let side_b: Vec<usize> = (0..psi.qubit_count()).rev().filter(|q| !cut.contains(q)).collect();
    let (da, db) = (1usize << side_a.len(), 1usize << side_b.len());
    let offset = |sides: &[usize], local: usize| -> usize {
        let k = sides.len();
        sides.iter().enumerate().filter(|(p, _)| local >> (k - 1 - p) & 1 == 1).map(|(_, &q)| 1usize << q).sum()
    };
    let m = DMatrix::from_fn(da, db, |r, c| psi.amplitude(offset(&side_a, r) + offset(&side_b, c)));
    Ok((m, side_b))
}

/// Schmidt coefficients of `psi` across `cut | rest`, in decreasing order.
/// Their squares sum to one.
pub fn schmidt_coefficients(psi: &StateVector, cut: &[usize]) -> Result<Vec<f64>> {
    let (m, _) = reshape_for_cut(psi, cut)?;
    let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(sv)
}

/// Number of Schmidt coefficients above `tol`.
pub fn schmidt_rank(psi: &StateVector, cut: &[usize], tol: f64) -> Result<usize> {
    Ok(schmidt_coefficients(psi, cut)?.into_iter().filter(|&s| s > tol).count())
}

/// Splits a (near-)product state into its two factors.
///
/// Returns `(cut factor, rest factor, discarded weight)`, where the factors
/// are the leading Schmidt vectors (each side compacted in increasing qubit
/// order) and the discarded weight is `1 − s₀²`.
///
/// The cut factor is the top eigenvector of the reduced density matrix and
/// the rest factor its projection. nalgebra's SVD can return a wrong left
/// singular vector for exactly rank-1 2×2 inputs, which is the common case
/// here.
pub fn factor_product(psi: &StateVector, cut: &[usize]) -> Result<(StateVector, StateVector, f64)> {
    let (m, _) = reshape_for_cut(psi, cut)?;
    let eig = (&m * m.adjoint()).symmetric_eigen();
    let lead = eig.eigenvalues.iamax();
    let a = eig.eigenvectors.column(lead).into_owned();
    let b: Vec<C64> = (0..m.ncols()).map(|j| (0..m.nrows()).map(|i| a[i].conj() * m[(i, j)]).sum()).collect();
    let weight: f64 = b.iter().map(|z| z.norm_sqr()).sum();
    Ok((StateVector::normalized(a.iter().copied().collect())?, StateVector::normalized(b)?, (1.0 - weight).max(0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factors_exact_rank_one_states() {
        let a = [0.6442176872376911, 0.7648421872844885];
        let amps: Vec<C64> = [a[0] * a[0], a[0] * a[1], a[1] * a[0], a[1] * a[1]].iter().map(|&x| C64::new(x, 0.0)).collect();
        let psi = StateVector::normalized(amps).unwrap();
        let (left, right, lost) = factor_product(&psi, &[1]).unwrap();
        let expect = StateVector::from_real(&a).unwrap();
        assert!(left.phase_distance(&expect).unwrap() < 1e-12);
        assert!(right.phase_distance(&expect).unwrap() < 1e-12);
        assert!(lost < 1e-12);
    }
    use crate::gates::{self, BellState};
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn fidelity_basics() {
        let mut rng = rand::rng();
        let psi = StateVector::random(2, &mut rng);
        assert!((fidelity(&psi, &psi).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(fidelity(&StateVector::zero(), &StateVector::one()).unwrap(), 0.0);
        assert!(fidelity(&StateVector::zero(), &psi).is_err());
    }

    #[test]
    fn trace_distance_basics() {
        let z = DensityMatrix::from_pure(&StateVector::zero());
        let o = DensityMatrix::from_pure(&StateVector::one());
        assert!(trace_distance(&z, &z).unwrap().abs() < 1e-15);
        assert!((trace_distance(&z, &o).unwrap() - 2.0).abs() < 1e-12);
        let nonherm = DMatrix::from_row_slice(2, 2, &[C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)]);
        assert!(matches!(
            trace_norm_of_difference(&nonherm, &DMatrix::zeros(2, 2)),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn schmidt_product_and_bell() {
        let mut rng = rand::rng();
        let prod = StateVector::random(1, &mut rng).tensor(&StateVector::random(1, &mut rng));
        let c = schmidt_coefficients(&prod, &[1]).unwrap();
        assert!((c[0] - 1.0).abs() < 1e-12 && c[1].abs() < 1e-7);
        let bell = &gates::bell_basis()[BellState::PhiPlus as usize];
        let c = schmidt_coefficients(bell, &[0]).unwrap();
        assert!((c[0] - FRAC_1_SQRT_2).abs() < 1e-12 && (c[1] - FRAC_1_SQRT_2).abs() < 1e-12);
        assert!(matches!(schmidt_coefficients(bell, &[0, 1]), Err(Error::InvalidBipartition(_))));
        assert!(matches!(schmidt_coefficients(bell, &[]), Err(Error::InvalidBipartition(_))));
    }

    #[test]
    fn factor_product_recovers_factors() {
        let mut rng = rand::rng();
        let a = StateVector::random(1, &mut rng);
        let b = StateVector::random(2, &mut rng);
        let (fa, fb, lost) = factor_product(&a.tensor(&b), &[2]).unwrap();
        assert!(lost < 1e-12);
        assert!(fa.approx_eq_up_to_phase(&a, 1e-9));
        assert!(fb.approx_eq_up_to_phase(&b, 1e-9));
        // Middle cut: qubit 1 on one side, qubits 2 and 0 on the other.
        let c = StateVector::random(1, &mut rng);
        let s = a.tensor(&c).tensor(&StateVector::one());
        let (fc, rest, lost) = factor_product(&s, &[1]).unwrap();
        assert!(lost < 1e-12);
        assert!(fc.approx_eq_up_to_phase(&c, 1e-9));
        assert!(rest.approx_eq_up_to_phase(&a.tensor(&StateVector::one()), 1e-9));
    }
}
