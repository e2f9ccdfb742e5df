use nalgebra::DMatrix;

use super::gate::{base_indices, check_subset, embed_operator, local_offsets, UnitaryGate};
use super::state::{qubits_for_len, StateVector};
use super::{C64, NORM_TOL};
use crate::error::{Error, Result};

/// Hermitian, unit-trace, positive semidefinite operator on `n` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: DMatrix<C64>,
    qubits: usize,
}

pub(crate) fn hermiticity_deviation(m: &DMatrix<C64>) -> f64 {
    (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub(crate) fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    let sym = (m + m.adjoint()).scale(0.5);
    let mut ev: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

impl DensityMatrix {
    pub fn new(entries: DMatrix<C64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::DimensionMismatch { left: entries.nrows(), right: entries.ncols() });
        }
        let qubits = qubits_for_len(entries.nrows())?;
        let deviation = hermiticity_deviation(&entries);
        if deviation > NORM_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        let trace = entries.trace();
        if (trace.re - 1.0).abs() > NORM_TOL || trace.im.abs() > NORM_TOL {
            return Err(Error::InvalidDensity(format!("trace {trace}")));
        }
        let min_ev = hermitian_eigenvalues(&entries)[0];
        if min_ev < -NORM_TOL {
            return Err(Error::InvalidDensity(format!("negative eigenvalue {min_ev:e}")));
        }
        Ok(Self { entries, qubits })
    }

    /// Rescales a nonzero positive operator to unit trace.
    pub fn normalized(entries: DMatrix<C64>) -> Result<Self> {
        let tr = entries.trace().re;
        if tr <= 1e-300 {
            return Err(Error::ZeroProbability);
        }
        Self::new(entries.unscale(tr))
    }

    pub fn from_pure(psi: &StateVector) -> Self {
        let v = psi.as_dvector();
        Self { entries: v * v.adjoint(), qubits: psi.qubit_count() }
    }

    /// Convex mixture `Σ wᵢ |ψᵢ⟩⟨ψᵢ|`.
    pub fn mixture(parts: &[(f64, StateVector)]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::InvalidDensity("empty mixture".into()))?;
        let dim = first.1.dim();
        let mut acc = DMatrix::zeros(dim, dim);
        for (w, psi) in parts {
            if psi.dim() != dim {
                return Err(Error::DimensionMismatch { left: dim, right: psi.dim() });
            }
            let v = psi.as_dvector();
            acc += (v * v.adjoint()).scale(*w);
        }
        Self::new(acc)
    }

    pub fn maximally_mixed(qubits: usize) -> Self {
        let dim = 1usize << qubits;
        Self { entries: DMatrix::identity(dim, dim).unscale(dim as f64), qubits }
    }

    pub fn qubit_count(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn trace(&self) -> C64 {
        self.entries.trace()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.entries)
    }

    pub fn purity(&self) -> f64 {
        (&self.entries * &self.entries).trace().re
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix {
            entries: self.entries.kronecker(&other.entries),
            qubits: self.qubits + other.qubits,
        }
    }

    pub fn apply_gate(&self, gate: &UnitaryGate, targets: &[usize]) -> Result<DensityMatrix> {
        let u = gate.embed(targets, self.qubits)?;
        Ok(DensityMatrix { entries: &u * &self.entries * u.adjoint(), qubits: self.qubits })
    }

    /// `Σ Kᵢ ρ Kᵢ†` with each Kraus operator acting on `targets`.
    ///
    /// The result is renormalized only through the caller's operator set, so a
    /// complete set keeps the trace at one.
    pub fn apply_kraus(&self, kraus: &[DMatrix<C64>], targets: &[usize]) -> Result<DensityMatrix> {
        check_subset(targets, self.qubits)?;
        let dim = self.dim();
        let mut acc = DMatrix::zeros(dim, dim);
        for k in kraus {
            if k.nrows() != 1 << targets.len() {
                return Err(Error::ArityMismatch { arity: qubits_for_len(k.nrows())?, targets: targets.len() });
            }
            let full = embed_operator(k, targets, self.qubits);
            acc += &full * &self.entries * full.adjoint();
        }
        Ok(DensityMatrix { entries: acc, qubits: self.qubits })
    }

    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        partial_trace(self, keep)
    }
}

/// Reduced state on `keep`; kept qubits stay in increasing index order.
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    if keep.is_empty() {
        return Err(Error::InvalidBipartition("nothing to keep".into()));
    }
    check_subset(keep, rho.qubits)?;
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    let traced: Vec<usize> = (0..rho.qubits).filter(|q| !kept.contains(q)).collect();
    if traced.is_empty() {
        return Ok(rho.clone());
    }
    // Kept index bits map onto the kept qubits, highest kept qubit on top.
    let kept_desc: Vec<usize> = kept.iter().rev().copied().collect();
    let kept_offsets = local_offsets(&kept_desc);
    let traced_offsets = local_offsets(&traced);
    let dk = kept_offsets.len();
    let mut out = DMatrix::zeros(dk, dk);
    for (r, &ro) in kept_offsets.iter().enumerate() {
        for (c, &co) in kept_offsets.iter().enumerate() {
            out[(r, c)] = traced_offsets.iter().map(|&t| rho.entries[(ro + t, co + t)]).sum();
        }
    }
    Ok(DensityMatrix { entries: out, qubits: kept.len() })
}

/// Operator `⟨b| ⊗ I` mapping the full register to the unmeasured qubits.
pub(crate) fn bra_projector(b: &StateVector, targets: &[usize], qubits: usize) -> DMatrix<C64> {
    let offsets = local_offsets(targets);
    let bases = base_indices(targets, qubits);
    let mut op = DMatrix::zeros(bases.len(), 1usize << qubits);
    for (rest, &base) in bases.iter().enumerate() {
        for (l, &o) in offsets.iter().enumerate() {
            op[(rest, base + o)] = b.amplitude(l).conj();
        }
    }
    op
}

/// Unnormalized residual `⟨b|ρ|b⟩` on the unmeasured qubits.
pub fn project_density(rho: &DensityMatrix, b: &StateVector, targets: &[usize]) -> Result<DMatrix<C64>> {
    super::gate::check_targets(targets, b.qubit_count(), rho.qubits)?;
    let op = bra_projector(b, targets, rho.qubits);
    Ok(&op * &rho.entries * op.adjoint())
}
