use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{C64, NORM_TOL};
use crate::error::{Error, Result};

/// A normalized pure state over `n` qubits.
///
/// Amplitude index bit `q` holds qubit `q`, so qubit 0 is the least
/// significant. [`StateVector::tensor`] puts the left operand's qubits above
/// the right operand's, which makes `|a⟩ ⊗ |b⟩` read left-to-right the same
/// way a ket label `|ab⟩` does.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: DVector<C64>,
    qubits: usize,
}

pub(crate) fn qubits_for_len(len: usize) -> Result<usize> {
    if len < 2 || !len.is_power_of_two() {
        return Err(Error::BadDimension { len });
    }
    Ok(len.trailing_zeros() as usize)
}

impl StateVector {
    /// Wraps `amps`, rejecting vectors whose squared norm is off by more than 1e-10.
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        let qubits = qubits_for_len(amps.len())?;
        let amps = DVector::from_vec(amps);
        let norm_sqr = amps.norm_squared();
        if (norm_sqr - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm_sqr });
        }
        Ok(Self { amps, qubits })
    }

    /// Like [`StateVector::new`] but rescales any nonzero vector to unit norm.
    pub fn normalized(amps: Vec<C64>) -> Result<Self> {
        let qubits = qubits_for_len(amps.len())?;
        let mut amps = DVector::from_vec(amps);
        let norm = amps.norm();
        if norm < 1e-300 {
            return Err(Error::NotNormalized { norm_sqr: 0.0 });
        }
        amps.unscale_mut(norm);
        Ok(Self { amps, qubits })
    }

    pub fn from_real(amps: &[f64]) -> Result<Self> {
        Self::new(amps.iter().map(|&a| C64::new(a, 0.0)).collect())
    }

    pub(crate) fn from_dvector_normalizing(amps: DVector<C64>) -> Result<Self> {
        Self::normalized(amps.iter().copied().collect())
    }

    /// Computational basis state `|index⟩` on `qubits` qubits.
    pub fn basis(qubits: usize, index: usize) -> Self {
        assert!(qubits >= 1 && index < (1 << qubits), "basis index out of range");
        let mut amps = DVector::zeros(1 << qubits);
        amps[index] = C64::new(1.0, 0.0);
        Self { amps, qubits }
    }

    pub fn zero() -> Self {
        Self::basis(1, 0)
    }

    pub fn one() -> Self {
        Self::basis(1, 1)
    }

    /// Haar-random pure state, drawn from normalized complex Gaussians.
    pub fn random<R: Rng + ?Sized>(qubits: usize, rng: &mut R) -> Self {
        let dim = 1usize << qubits;
        let amps: Vec<C64> = (0..dim)
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        Self::normalized(amps).expect("gaussian vector is nonzero")
    }

    pub fn qubit_count(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        self.amps.as_slice()
    }

    pub fn amplitude(&self, index: usize) -> C64 {
        self.amps[index]
    }

    pub(crate) fn as_dvector(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.norm_squared()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { left: self.dim(), right: other.dim() });
        }
        Ok(self.amps.dotc(&other.amps))
    }

    pub fn tensor(&self, other: &StateVector) -> StateVector {
        let amps = self.amps.kronecker(&other.amps);
        StateVector { amps, qubits: self.qubits + other.qubits }
    }

    /// Largest distance between `self` and any global-phase rotation of
    /// `other`, i.e. `‖a − e^{iφ} b‖` minimized over φ.
    pub fn phase_distance(&self, other: &StateVector) -> Result<f64> {
        let overlap = self.inner(other)?;
        // Align `other` to `self` by the phase of the overlap, then measure
        // the residual directly; the closed form 2 − 2|⟨a|b⟩| cancels badly.
        let phase = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { C64::new(1.0, 0.0) };
        Ok((&self.amps - &other.amps * phase.conj()).norm())
    }

    /// Equality up to a global phase.
    pub fn approx_eq_up_to_phase(&self, other: &StateVector, tol: f64) -> bool {
        matches!(self.phase_distance(other), Ok(d) if d <= tol)
    }

    pub fn scaled(&self, factor: C64) -> DVector<C64> {
        &self.amps * factor
    }
}

/// `a ⊗ b` with `a`'s qubits placed above `b`'s.
pub fn tensor(a: &StateVector, b: &StateVector) -> StateVector {
    a.tensor(b)
}

/// Tensor product of a list of states, first entry most significant.
pub fn tensor_all<'a, I>(states: I) -> Option<StateVector>
where
    I: IntoIterator<Item = &'a StateVector>,
{
    states.into_iter().fold(None, |acc: Option<StateVector>, s| match acc {
        None => Some(s.clone()),
        Some(a) => Some(a.tensor(s)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn zero_tensor_zero() {
        let s = tensor(&StateVector::zero(), &StateVector::zero());
        let expect = [1.0, 0.0, 0.0, 0.0];
        for (a, e) in s.amplitudes().iter().zip(expect) {
            assert!((a - C64::new(e, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn plus_tensor_one_orders_left_factor_high() {
        let plus = StateVector::from_real(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap();
        let s = tensor(&plus, &StateVector::one());
        let expect = [0.0, FRAC_1_SQRT_2, 0.0, FRAC_1_SQRT_2];
        for (a, e) in s.amplitudes().iter().zip(expect) {
            assert!((a.re - e).abs() < 1e-15 && a.im == 0.0);
        }
    }

    #[test]
    fn rejects_unnormalized_and_odd_lengths() {
        assert!(matches!(
            StateVector::from_real(&[1.0, 1.0]),
            Err(Error::NotNormalized { .. })
        ));
        assert!(matches!(
            StateVector::from_real(&[1.0, 0.0, 0.0]),
            Err(Error::BadDimension { len: 3 })
        ));
    }

    #[test]
    fn phase_equality() {
        let a = StateVector::from_real(&[0.6, 0.8]).unwrap();
        let b = StateVector::new(a.scaled(C64::from_polar(1.0, 1.3)).iter().copied().collect())
            .unwrap();
        assert!(a.approx_eq_up_to_phase(&b, 1e-12));
        assert!(!a.approx_eq_up_to_phase(&StateVector::zero(), 1e-3));
    }
}
