use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::density::DensityMatrix;
use super::C64;
use crate::error::{Error, Result};

/// Single-qubit noise applied independently to each qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    /// `ρ → (1−ε)ρ + ε·I/2 ⊗ Tr_q ρ`.
    Depolarizing,
    /// Off-diagonal coherences scaled by `1−ε`.
    Dephasing,
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseKind::Depolarizing => "depolarizing",
            NoiseKind::Dephasing => "dephasing",
        })
    }
}

impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "depolarizing" | "depolarising" | "depol" => Ok(NoiseKind::Depolarizing),
            "dephasing" | "dephase" => Ok(NoiseKind::Dephasing),
            other => Err(Error::OutOfRange(format!("unknown noise channel `{other}`"))),
        }
    }
}

/// A noise kind at a fixed strength `ε ∈ [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseChannel {
    kind: NoiseKind,
    epsilon: f64,
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

impl NoiseChannel {
    pub fn new(kind: NoiseKind, epsilon: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::OutOfRange(format!("noise strength {epsilon} outside [0, 1]")));
        }
        Ok(Self { kind, epsilon })
    }

    pub fn kind(&self) -> NoiseKind {
        self.kind
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Kraus operators of the single-qubit map.
    pub fn kraus(&self) -> Vec<DMatrix<C64>> {
        let e = self.epsilon;
        let id = DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(1.0)]);
        let x = DMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]);
        let y = DMatrix::from_row_slice(2, 2, &[c(0.0), C64::new(0.0, -1.0), C64::new(0.0, 1.0), c(0.0)]);
        let z = DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)]);
        match self.kind {
            NoiseKind::Depolarizing => {
                let w = (e / 4.0).sqrt();
                vec![id.scale((1.0 - 3.0 * e / 4.0).sqrt()), x.scale(w), y.scale(w), z.scale(w)]
            }
            NoiseKind::Dephasing => {
                vec![id.scale((1.0 - e / 2.0).sqrt()), z.scale((e / 2.0).sqrt())]
            }
        }
    }

    pub fn apply_to_qubit(&self, rho: &DensityMatrix, qubit: usize) -> Result<DensityMatrix> {
        rho.apply_kraus(&self.kraus(), &[qubit])
    }

    /// Applies the channel to every qubit of `rho`.
    pub fn apply_all(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        let kraus = self.kraus();
        (0..rho.qubit_count()).try_fold(rho.clone(), |acc, q| acc.apply_kraus(&kraus, &[q]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statekit::{trace_distance, StateVector};

    #[test]
    fn full_depolarizing_is_maximally_mixed() {
        let mut rng = rand::rng();
        let rho = DensityMatrix::from_pure(&StateVector::random(2, &mut rng));
        let out = NoiseChannel::new(NoiseKind::Depolarizing, 1.0).unwrap().apply_all(&rho).unwrap();
        let d = trace_distance(&out, &DensityMatrix::maximally_mixed(2)).unwrap();
        assert!(d < 1e-12);
    }

    #[test]
    fn dephasing_scales_coherence() {
        let plus = StateVector::from_real(&[std::f64::consts::FRAC_1_SQRT_2; 2]).unwrap();
        let out = NoiseChannel::new(NoiseKind::Dephasing, 0.3)
            .unwrap()
            .apply_to_qubit(&DensityMatrix::from_pure(&plus), 0)
            .unwrap();
        assert!((out.entries()[(0, 1)].re - 0.5 * 0.7).abs() < 1e-14);
        assert!((out.entries()[(0, 0)].re - 0.5).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_strength_and_names() {
        assert!(NoiseChannel::new(NoiseKind::Dephasing, 1.5).is_err());
        assert!(NoiseChannel::new(NoiseKind::Dephasing, -0.1).is_err());
        assert!("amplitude".parse::<NoiseKind>().is_err());
        assert_eq!("Depolarizing".parse::<NoiseKind>().unwrap(), NoiseKind::Depolarizing);
    }
}
