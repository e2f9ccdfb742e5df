//! Named invariant checks that can be run from the command line.
//!
//! Each check is self-contained and deterministic. A [`Fault`] swaps a
//! correct construction for a deliberately broken one so that the suite can
//! be shown to catch it.

use std::f64::consts::{FRAC_PI_4, FRAC_PI_6, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analytics::{
    chain_angle, compare_strategies, spectrum, spectrum_by_enumeration, success_gamma, CloneShare, Strategy,
};
use crate::error::Result;
use crate::gates::{
    bell_basis, controlled_probe_rotation, d_chain, d_gate, dilate, merged_angle, pauli_z, pcl_rotation,
    phi_state, povm_pair, reduction_omega, Control, Sign,
};
use crate::statekit::{
    apply_gate, fidelity, kraus_probabilities, schmidt_rank, tensor_all, trace_distance, DensityMatrix,
    NoiseChannel, NoiseKind, StateVector, UnitaryGate, C64,
};
use crate::teleclone::{
    alpha_state, bell_components, ideal_resource, kappa, odd_parity_resource, port_states, preparation_branches,
    simulate, step_angles, step_probability, branch_probabilities, PrepMode, ProtocolConfig,
};

/// A deliberately broken construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fault {
    /// The reduction rotates the probe by `−2ω` instead of `2ω`.
    OmegaSign,
    /// The reduction rotation fires on system `|0⟩` instead of `|1⟩`.
    ControlOnZero,
}

impl std::str::FromStr for Fault {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "omega-sign" => Ok(Fault::OmegaSign),
            "control-on-zero" => Ok(Fault::ControlOnZero),
            other => Err(crate::Error::OutOfRange(format!("unknown fault `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub id: &'static str,
    pub summary: &'static str,
    pub passed: bool,
    pub detail: String,
}

struct Check {
    id: &'static str,
    summary: &'static str,
    run: fn(Option<Fault>) -> Result<(bool, String)>,
}

const CHECKS: &[Check] = &[
    Check { id: "gamma-values", summary: "success probability spot values and θ → 0 limit", run: gamma_values },
    Check { id: "strategy-inequalities", summary: "E1 ≤ E2 and F1 ≤ F2 over an (M, N, θ) grid", run: strategy_inequalities },
    Check { id: "spectrum-oracle", summary: "convolution and enumeration spectra agree", run: spectrum_oracle },
    Check { id: "d-gate-law", summary: "D gate maps |φ(θ₃)⟩|1⟩ to the product and D† undoes it", run: d_gate_law },
    Check { id: "d-chain-residue", summary: "chained compression leaves the residue qubits in |1⟩", run: d_chain_residue },
    Check { id: "reduction-branch", summary: "probe-|P₀⟩ probability and state of the reduction", run: reduction_branch },
    Check { id: "reduction-joint-state", summary: "full reduction output including the failure branch", run: reduction_joint_state },
    Check { id: "zz-symmetry", summary: "σ_z⊗σ_z port-state symmetry", run: zz_symmetry },
    Check { id: "dilation-faithfulness", summary: "probe dilation reproduces the generalized measurement", run: dilation_faithfulness },
    Check { id: "ghz-preparation", summary: "GHZ preparation lands in the two parity classes", run: ghz_preparation },
    Check { id: "bell-reconstruction", summary: "Bell components reassemble input ⊗ resource", run: bell_reconstruction },
    Check { id: "step-rate-identity", summary: "p₁/2 + p₋₁κ² equals the closed-form step rate", run: step_rate_identity },
    Check { id: "alpha-entanglement", summary: "Φ⁻ residual is entangled below π/4 and orthogonal to the flipped product", run: alpha_entanglement },
    Check { id: "trace-fidelity-relation", summary: "T = 2√(1 − F) for pure states", run: trace_fidelity_relation },
    Check { id: "trace-contraction", summary: "trace distance contracts under noise channels", run: trace_contraction },
    Check { id: "pcl-decomposition", summary: "five-factor PCL rotation identity", run: pcl_decomposition },
    Check { id: "protocol-monte-carlo", summary: "Monte Carlo overall rates within 3σ of closed form", run: protocol_monte_carlo },
];

/// Identifiers of every registered check, in run order.
pub fn check_ids() -> Vec<&'static str> {
    CHECKS.iter().map(|c| c.id).collect()
}

/// Runs every check whose id contains `filter` (all checks for `None`).
pub fn run_checks(filter: Option<&str>, fault: Option<Fault>) -> Vec<CheckReport> {
    CHECKS
        .iter()
        .filter(|c| filter.is_none_or(|f| c.id.contains(f)))
        .map(|c| {
            let (passed, detail) = match (c.run)(fault) {
                Ok(r) => r,
                Err(e) => (false, format!("error: {e}")),
            };
            CheckReport { id: c.id, summary: c.summary, passed, detail }
        })
        .collect()
}

fn verdict(worst: f64, tol: f64) -> (bool, String) {
    (worst <= tol, format!("worst deviation {worst:.3e}, tolerance {tol:.0e}"))
}

fn grid(lo: f64, hi: f64, points: usize) -> impl Iterator<Item = f64> {
    (0..points).map(move |i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
}

fn gamma_values(_: Option<Fault>) -> Result<(bool, String)> {
    let mut worst: f64 = (success_gamma(1, 2, FRAC_PI_6)? - 2.0 / 3.0).abs();
    for (k, n) in [(1, 2), (2, 3), (3, 7)] {
        worst = worst.max((success_gamma(k, n, FRAC_PI_4)? - 1.0).abs());
        worst = worst.max((success_gamma(k, n, 0.0)? - k as f64 / n as f64).abs());
    }
    Ok(verdict(worst, 1e-12))
}

fn strategy_inequalities(_: Option<Fault>) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for n in 3..=10 {
        for m in 2..n {
            for theta in grid(0.01, FRAC_PI_4, 50) {
                let c = compare_strategies(m, n, theta)?;
                worst = worst.max(c.e1 - c.e2).max(c.f1 - c.f2);
            }
            // The fidelities meet at π/4.
            let c = compare_strategies(m, n, FRAC_PI_4)?;
            worst = worst.max((c.f1 - c.f2).abs());
        }
    }
    Ok(verdict(worst.max(0.0), 1e-12))
}

fn random_strategy<R: Rng>(rng: &mut R) -> Result<Strategy> {
    let kinds = rng.random_range(1..=3);
    let shares: Vec<CloneShare> = (0..kinds)
        .map(|_| {
            let k = rng.random_range(1..=3);
            CloneShare::new(k, k + rng.random_range(0..=4), rng.random_range(1..=3))
        })
        .collect::<Result<_>>()?;
    Strategy::new(&shares, rng.random_range(0.0..FRAC_PI_4), 1)
}

fn spectrum_oracle(_: Option<Fault>) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let s = random_strategy(&mut rng)?;
        let a = spectrum(&s)?;
        let b = spectrum_by_enumeration(&s)?;
        worst = worst.max(a.max_abs_difference(&b)).max((a.total() - 1.0).abs()).max((b.total() - 1.0).abs());
    }
    Ok(verdict(worst, 1e-12))
}

fn d_gate_law(_: Option<Fault>) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let (t1, t2) = (rng.random_range(0.01..FRAC_PI_4), rng.random_range(0.01..FRAC_PI_4));
        let d = d_gate(t1, t2)?;
        for s in [Sign::Plus, Sign::Minus] {
            let input = phi_state(merged_angle(t1, t2), s).tensor(&StateVector::one());
            let target = phi_state(t1, s).tensor(&phi_state(t2, s));
            worst = worst.max(apply_gate(&input, &d, &[1, 0])?.phase_distance(&target)?);
            worst = worst.max(apply_gate(&target, &d.dagger(), &[1, 0])?.phase_distance(&input)?);
        }
    }
    Ok(verdict(worst, 1e-10))
}

fn d_chain_residue(_: Option<Fault>) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for count in 2..=5 {
        for theta in [0.2, FRAC_PI_6, FRAC_PI_4] {
            let chain = d_chain(count, theta)?;
            for s in [Sign::Plus, Sign::Minus] {
                let copies: Vec<StateVector> = (0..count).map(|_| phi_state(theta, s)).collect();
                let input = tensor_all(&copies).expect("nonempty");
                let targets: Vec<usize> = (0..count).rev().collect();
                let out = apply_gate(&input, &chain, &targets)?;
                let mut expect = phi_state(chain_angle(theta, count as u32)?, s);
                for _ in 1..count {
                    expect = expect.tensor(&StateVector::one());
                }
                worst = worst.max(out.phase_distance(&expect)?);
            }
        }
    }
    Ok(verdict(worst, 1e-10))
}

fn faulty_reduction(m: u32, n: u32, theta: f64, fault: Option<Fault>) -> Result<UnitaryGate> {
    let omega = reduction_omega(m, n, theta)?;
    Ok(match fault {
        Some(Fault::OmegaSign) => controlled_probe_rotation(-omega, Control::OnOne),
        Some(Fault::ControlOnZero) => controlled_probe_rotation(omega, Control::OnZero),
        None => controlled_probe_rotation(omega, Control::OnOne),
    })
}

const REDUCTION_CASES: [(u32, u32); 4] = [(1, 2), (1, 3), (2, 3), (3, 5)];

fn reduction_branch(fault: Option<Fault>) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for (m, n) in REDUCTION_CASES {
        for theta in grid(0.05, FRAC_PI_4, 10) {
            let u = faulty_reduction(m, n, theta, fault)?;
            for s in [Sign::Plus, Sign::Minus] {
                let joint = apply_gate(&phi_state(chain_angle(theta, m)?, s).tensor(&StateVector::zero()), &u, &[1, 0])?;
                let ok = vec![joint.amplitude(0), joint.amplitude(2)];
                let p: f64 = ok.iter().map(|z| z.norm_sqr()).sum();
                worst = worst.max((p - success_gamma(m, n, theta)?).abs());
                let branch = StateVector::normalized(ok)?;
                worst = worst.max(branch.phase_distance(&phi_state(chain_angle(theta, n)?, s))?);
            }
        }
    }
    Ok(verdict(worst, 1e-10))
}

/// `√γ|φ±(θ_N)⟩|P₀⟩ − √(1−γ)|1⟩|P₁⟩`, compared without freeing the relative
/// phase of the two branches.
fn reduction_joint_state(fault: Option<Fault>) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for (m, n) in REDUCTION_CASES {
        for theta in grid(0.05, FRAC_PI_4, 10) {
            let u = faulty_reduction(m, n, theta, fault)?;
            let gamma = success_gamma(m, n, theta)?;
            for s in [Sign::Plus, Sign::Minus] {
                let joint = apply_gate(&phi_state(chain_angle(theta, m)?, s).tensor(&StateVector::zero()), &u, &[1, 0])?;
                let good = phi_state(chain_angle(theta, n)?, s).tensor(&StateVector::zero());
                let bad = StateVector::one().tensor(&StateVector::one());
                let expect: Vec<C64> = good
                    .amplitudes()
                    .iter()
                    .zip(bad.amplitudes())
                    .map(|(g, b)| g * gamma.sqrt() - b * (1.0 - gamma).max(0.0).sqrt())
                    .collect();
                worst = worst.max(joint.phase_distance(&StateVector::normalized(expect)?)?);
            }
        }
    }
    Ok(verdict(worst, 1e-10))
}

fn zz_symmetry(_: Option<Fault>) -> Result<(bool, String)> {
    let zz = pauli_z().kron(&pauli_z());
    let mut worst: f64 = 0.0;
    for n in 2..=6 {
        for j in 1..n {
            for theta in grid(0.02, FRAC_PI_4, 8) {
                let (phi0, phi1) = port_states(j, n, theta)?;
                for (sign, phi) in [(-1.0, &phi0), (1.0, &phi1)] {
                    let out = apply_gate(phi, &zz, &[1, 0])?;
                    let gap: f64 =
                        out.amplitudes().iter().zip(phi.amplitudes()).map(|(a, b)| (a - b * sign).norm_sqr()).sum();
                    worst = worst.max(gap.sqrt());
                }
            }
        }
    }
    Ok(verdict(worst, 1e-10))
}

fn dilation_faithfulness(_: Option<Fault>) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let theta = rng.random_range(0.0..std::f64::consts::FRAC_PI_2);
        let povm = povm_pair(theta)?;
        let dil = dilate(&povm, theta)?;
        let psi = StateVector::random(1, &mut rng);
        let direct = kraus_probabilities(&psi, &povm, 0)?;
        for (m, (p, post)) in dil.branches(&psi)?.iter().enumerate() {
            worst = worst.max((p - direct[m]).abs());
            if let Some(post) = post {
                let kraus = povm.kraus(m);
                let v: Vec<C64> = (0..2).map(|r| kraus[(r, r)] * psi.amplitude(r)).collect();
                worst = worst.max(post.phase_distance(&StateVector::normalized(v)?)?);
            }
        }
    }
    Ok(verdict(worst, 1e-10))
}

fn ghz_preparation(_: Option<Fault>) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for n in 2..=6 {
        for j in 1..n {
            for theta in grid(0.05, FRAC_PI_4, 6) {
                let even = ideal_resource(j, n, theta)?;
                let odd = odd_parity_resource(j, n, theta)?;
                let (p1, pm) = branch_probabilities(j, n, theta)?;
                let (mut e, mut o) = (0.0, 0.0);
                for (p, r) in preparation_branches(j, n, theta)? {
                    let target = if r.parity == 1 { &even } else { &odd };
                    worst = worst.max(r.state.phase_distance(&target.state)?);
                    if r.parity == 1 {
                        e += p;
                    } else {
                        o += p;
                    }
                }
                worst = worst.max((e - p1).abs()).max((o - pm).abs());
            }
        }
    }
    Ok(verdict(worst, 1e-10))
}

fn bell_reconstruction(_: Option<Fault>) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for n in 2..=5 {
        for j in 1..n {
            for theta in grid(0.1, FRAC_PI_4, 4) {
                let x = phi_state(step_angles(j, n, theta)?.0, Sign::Minus);
                for res in [ideal_resource(j, n, theta)?, odd_parity_resource(j, n, theta)?] {
                    let comps = bell_components(&x, &res)?;
                    let whole = x.tensor(&res.state);
                    let basis = bell_basis();
                    for (i, z) in whole.amplitudes().iter().enumerate() {
                        let sum: C64 = comps.iter().zip(&basis).map(|((_, v), b)| b.amplitude(i >> 2) * v[i & 3]).sum();
                        worst = worst.max((sum - z).norm());
                    }
                }
            }
        }
    }
    Ok(verdict(worst, 1e-10))
}

fn step_rate_identity(_: Option<Fault>) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for n in 2..=6 {
        for j in 1..n {
            for theta in grid(0.02, FRAC_PI_4, 20) {
                let (p1, pm) = branch_probabilities(j, n, theta)?;
                let by_branches = p1 / 2.0 + pm * kappa(j, n, theta)?.powi(2);
                let sin_sq = (2.0 * step_angles(j, n, theta)?.0).sin().powi(2);
                let closed = step_probability(j, n, theta)?;
                worst = worst.max((by_branches - closed).abs()).max((sin_sq / 2.0 - closed).abs());
            }
        }
    }
    Ok(verdict(worst, 1e-12))
}

fn alpha_entanglement(_: Option<Fault>) -> Result<(bool, String)> {
    let mut ok = true;
    let mut worst: f64 = 0.0;
    for theta in [0.1, 0.3, 0.6, FRAC_PI_4] {
        for sign in [Sign::Plus, Sign::Minus] {
            let alpha = alpha_state(1, 2, theta, sign)?;
            let rank = schmidt_rank(&alpha, &[1], 1e-9)?;
            ok &= rank == if theta < FRAC_PI_4 { 2 } else { 1 };
            let (_, a, c) = step_angles(1, 2, theta)?;
            let flipped = phi_state(a, sign.flipped()).tensor(&phi_state(c, sign.flipped()));
            worst = worst.max(alpha.inner(&flipped)?.norm());
        }
    }
    let (pass, detail) = verdict(worst, 1e-10);
    Ok((pass && ok, format!("{detail}; Schmidt ranks {}", if ok { "as expected" } else { "wrong" })))
}

fn trace_fidelity_relation(_: Option<Fault>) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (a, b) = (StateVector::random(2, &mut rng), StateVector::random(2, &mut rng));
        let t = trace_distance(&DensityMatrix::from_pure(&a), &DensityMatrix::from_pure(&b))?;
        worst = worst.max((t - 2.0 * (1.0 - fidelity(&a, &b)?).sqrt()).abs());
    }
    Ok(verdict(worst, 1e-9))
}

fn random_density<R: Rng>(rng: &mut R) -> Result<DensityMatrix> {
    let parts: Vec<(f64, StateVector)> =
        (0..3).map(|_| (rng.random_range(0.1..1.0), StateVector::random(2, rng))).collect();
    let total: f64 = parts.iter().map(|(w, _)| w).sum();
    DensityMatrix::mixture(&parts.into_iter().map(|(w, s)| (w / total, s)).collect::<Vec<_>>())
}

fn trace_contraction(_: Option<Fault>) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let mut worst = f64::NEG_INFINITY;
    for kind in [NoiseKind::Depolarizing, NoiseKind::Dephasing] {
        for _ in 0..20 {
            let (a, b) = (random_density(&mut rng)?, random_density(&mut rng)?);
            let before = trace_distance(&a, &b)?;
            for eps in [0.0, 0.1, 0.3, 0.6, 1.0] {
                let ch = NoiseChannel::new(kind, eps)?;
                let after = trace_distance(&ch.apply_all(&a)?, &ch.apply_all(&b)?)?;
                worst = worst.max(after - before);
            }
        }
    }
    Ok((worst <= 1e-9, format!("largest increase {worst:.3e} (slack 1e-9)")))
}

fn pcl_decomposition(_: Option<Fault>) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let v = pcl_rotation(rng.random_range(-PI..PI), rng.random_range(-PI..PI));
        worst = worst.max(v.product().distance_up_to_phase(&v.direct));
    }
    Ok(verdict(worst, 1e-10))
}

fn protocol_monte_carlo(_: Option<Fault>) -> Result<(bool, String)> {
    let mut ok = true;
    let mut notes = Vec::new();
    for (m, n, theta, prep) in
        [
        (1, 2, FRAC_PI_4, PrepMode::Ideal),
        (2, 3, FRAC_PI_6, PrepMode::Ideal),
        (1, 2, FRAC_PI_6, PrepMode::Ghz),
        (2, 5, 0.7, PrepMode::Ghz),
    ]
    {
        let config = ProtocolConfig::new(m, n, theta)?.with_prep(prep);
        let r = simulate(&config, 20_000, 2024)?;
        ok &= r.within_three_sigma && r.ledger_consistent && r.min_clone_fidelity.is_none_or(|f| f > 1.0 - 1e-9);
        notes.push(format!("M={m} N={n} {prep}: {:.4} vs {:.4}", r.empirical_success_rate, r.analytic_success_rate));
    }
    Ok((ok, notes.join("; ")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_are_unique() {
        let mut ids = check_ids();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), CHECKS.len());
    }

    #[test]
    fn filter_selects_by_substring() {
        let r = run_checks(Some("zz"), None);
        assert_eq!(r.len(), 1);
        assert!(r[0].passed, "{}", r[0].detail);
        assert!(run_checks(Some("no-such-check"), None).is_empty());
    }

    #[test]
    fn reduction_faults_are_caught() {
        for fault in [Fault::OmegaSign, Fault::ControlOnZero] {
            let r = run_checks(Some("reduction"), Some(fault));
            assert!(r.iter().any(|c| !c.passed), "{fault:?} went unnoticed");
        }
        assert!(run_checks(Some("reduction"), None).iter().all(|c| c.passed));
    }
}
