use nalgebra::DMatrix;

use super::state::{qubits_for_len, StateVector};
use super::{C64, NORM_TOL};
use crate::error::{Error, Result};

/// A unitary on `arity` qubits.
///
/// Row/column index bits follow the target list handed to
/// [`apply_gate`]: `targets[0]` is the most significant local bit.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryGate {
    matrix: DMatrix<C64>,
    arity: usize,
}

/// Largest entry of `|U†U − I|`.
pub fn unitarity_deviation(m: &DMatrix<C64>) -> f64 {
    let prod = m.adjoint() * m;
    let id = DMatrix::<C64>::identity(m.nrows(), m.ncols());
    (prod - id).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

impl UnitaryGate {
    pub fn new(matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch { left: matrix.nrows(), right: matrix.ncols() });
        }
        let arity = qubits_for_len(matrix.nrows())?;
        let deviation = unitarity_deviation(&matrix);
        if deviation > NORM_TOL {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(Self { matrix, arity })
    }

    /// Builds a gate from real entries given row by row.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        let matrix = DMatrix::from_fn(n, n, |r, c| C64::new(rows[r][c], 0.0));
        Self::new(matrix)
    }

    pub fn identity(arity: usize) -> Self {
        let dim = 1 << arity;
        Self { matrix: DMatrix::identity(dim, dim), arity }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn dagger(&self) -> Self {
        Self { matrix: self.matrix.adjoint(), arity: self.arity }
    }

    /// `self · other`: `other` acts first.
    pub fn then_after(&self, other: &UnitaryGate) -> Result<Self> {
        if self.arity != other.arity {
            return Err(Error::DimensionMismatch { left: self.arity, right: other.arity });
        }
        Ok(Self { matrix: &self.matrix * &other.matrix, arity: self.arity })
    }

    /// `self ⊗ other`, `self` on the more significant qubits.
    pub fn kron(&self, other: &UnitaryGate) -> Self {
        Self { matrix: self.matrix.kronecker(&other.matrix), arity: self.arity + other.arity }
    }

    pub fn deviation_from_unitary(&self) -> f64 {
        unitarity_deviation(&self.matrix)
    }

    /// Lifts the gate to a full `2^n × 2^n` operator acting on `targets`.
    pub fn embed(&self, targets: &[usize], qubits: usize) -> Result<DMatrix<C64>> {
        check_targets(targets, self.arity, qubits)?;
        Ok(embed_operator(&self.matrix, targets, qubits))
    }

    /// Largest entry-wise difference to `other` after removing the best
    /// global phase.
    pub fn distance_up_to_phase(&self, other: &UnitaryGate) -> f64 {
        let overlap: C64 = self.matrix.iter().zip(other.matrix.iter()).map(|(a, b)| a.conj() * b).sum();
        let phase = if overlap.norm() > 1e-300 { overlap / overlap.norm() } else { C64::new(1.0, 0.0) };
        self.matrix
            .iter()
            .zip(other.matrix.iter())
            .map(|(a, b)| (a * phase - b).norm())
            .fold(0.0, f64::max)
    }
}

pub(crate) fn check_targets(targets: &[usize], arity: usize, qubits: usize) -> Result<()> {
    if targets.len() != arity {
        return Err(Error::ArityMismatch { arity, targets: targets.len() });
    }
    check_subset(targets, qubits)
}

pub(crate) fn check_subset(targets: &[usize], qubits: usize) -> Result<()> {
    for (i, &t) in targets.iter().enumerate() {
        if t >= qubits {
            return Err(Error::QubitOutOfRange { index: t, qubits });
        }
        if targets[..i].contains(&t) {
            return Err(Error::DuplicateQubit(t));
        }
    }
    Ok(())
}

/// Full-register offsets of each local index; `targets[0]` is the top local bit.
pub(crate) fn local_offsets(targets: &[usize]) -> Vec<usize> {
    let k = targets.len();
    (0..1usize << k)
        .map(|local| {
            targets
                .iter()
                .enumerate()
                .filter(|(p, _)| local >> (k - 1 - p) & 1 == 1)
                .map(|(_, &q)| 1usize << q)
                .sum()
        })
        .collect()
}

/// Indices of the full register whose target bits are all zero, in
/// increasing order. Position in this list is the "rest" index.
pub(crate) fn base_indices(targets: &[usize], qubits: usize) -> Vec<usize> {
    let mask: usize = targets.iter().map(|&t| 1usize << t).sum();
    (0..1usize << qubits).filter(|i| i & mask == 0).collect()
}

pub(crate) fn embed_operator(op: &DMatrix<C64>, targets: &[usize], qubits: usize) -> DMatrix<C64> {
    let dim = 1usize << qubits;
    let offsets = local_offsets(targets);
    let mut full = DMatrix::zeros(dim, dim);
    for base in base_indices(targets, qubits) {
        for (r, &ro) in offsets.iter().enumerate() {
            for (c, &co) in offsets.iter().enumerate() {
                full[(base + ro, base + co)] = op[(r, c)];
            }
        }
    }
    full
}

/// Applies `gate` to the listed qubits of `state`, identity elsewhere.
pub fn apply_gate(state: &StateVector, gate: &UnitaryGate, targets: &[usize]) -> Result<StateVector> {
    check_targets(targets, gate.arity(), state.qubit_count())?;
    let offsets = local_offsets(targets);
    let amps = state.amplitudes();
    let mut out = amps.to_vec();
    let m = gate.matrix();
    let mut local = vec![C64::new(0.0, 0.0); offsets.len()];
    for base in base_indices(targets, state.qubit_count()) {
        for (l, &o) in offsets.iter().enumerate() {
            local[l] = amps[base + o];
        }
        for (r, &o) in offsets.iter().enumerate() {
            out[base + o] = (0..offsets.len()).map(|c| m[(r, c)] * local[c]).sum();
        }
    }
    StateVector::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates;
    use std::f64::consts::PI;

    #[test]
    fn x_flips_zero() {
        let out = apply_gate(&StateVector::zero(), &gates::pauli_x(), &[0]).unwrap();
        assert!(out.approx_eq_up_to_phase(&StateVector::one(), 1e-15));
        assert!((out.amplitude(1).re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ry_pi_on_zero_gives_minus_one() {
        let out = apply_gate(&StateVector::zero(), &gates::ry(PI), &[0]).unwrap();
        assert!(out.amplitude(0).norm() < 1e-15);
        assert!((out.amplitude(1).re + 1.0).abs() < 1e-15);
    }

    #[test]
    fn target_order_matters() {
        // CNOT with control listed first.
        let cnot = UnitaryGate::from_real_rows(&[
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 1.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
            &[0.0, 0.0, 1.0, 0.0],
        ])
        .unwrap();
        // |q1 q0⟩ = |10⟩ → index 2
        let s = StateVector::basis(2, 2);
        let a = apply_gate(&s, &cnot, &[1, 0]).unwrap();
        assert!((a.amplitude(3).re - 1.0).abs() < 1e-15);
        let b = apply_gate(&s, &cnot, &[0, 1]).unwrap();
        assert!((b.amplitude(2).re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn target_errors() {
        let s = StateVector::basis(2, 0);
        let cz = gates::pauli_z().kron(&gates::pauli_z());
        assert_eq!(apply_gate(&s, &cz, &[0, 0]), Err(Error::DuplicateQubit(0)));
        assert!(matches!(apply_gate(&s, &cz, &[0, 2]), Err(Error::QubitOutOfRange { index: 2, .. })));
        assert!(matches!(apply_gate(&s, &cz, &[0]), Err(Error::ArityMismatch { .. })));
    }

    #[test]
    fn embed_matches_apply() {
        let mut rng = rand::rng();
        let s = StateVector::random(3, &mut rng);
        let g = gates::ry(0.4).kron(&gates::pauli_x());
        let via_apply = apply_gate(&s, &g, &[0, 2]).unwrap();
        let full = g.embed(&[0, 2], 3).unwrap();
        let via_embed = full * s.as_dvector();
        for (a, b) in via_apply.amplitudes().iter().zip(via_embed.iter()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn rejects_non_unitary() {
        assert!(matches!(
            UnitaryGate::from_real_rows(&[&[1.0, 1.0], &[0.0, 1.0]]),
            Err(Error::NotUnitary { .. })
        ));
    }
}
