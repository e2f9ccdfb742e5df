use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use super::resource::{ghz_state, step_angles, Preparation, QUBIT_A, QUBIT_C, QUBIT_S};
use super::step::{chain_success_probability, compress_with, overall_probability_ghz, step_branches_unnormalized};
use super::trial::{compare_rate, trial_rng};
use super::ProtocolConfig;
use crate::error::{Error, Result};
use crate::gates::{phi_state, reduction_u, BellState};
use crate::statekit::{
    sample_index, trace_distance, trace_norm_of_difference, DensityMatrix, NoiseChannel, NoiseKind, C64,
};

/// Effect of per-qubit noise on the GHZ states behind every resource.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustnessPoint {
    pub noise: NoiseKind,
    pub epsilon: f64,
    /// `T(|ξ⟩⟨ξ|, σ)` between the clean and the corrupted GHZ state.
    pub input_trace_distance: f64,
    /// Largest (over steps) trace distance between the clean and corrupted
    /// step outputs, taken over the Bell outcome record and `(A, Cⱼ)`
    /// together with corrections applied.
    pub output_trace_distance: f64,
    /// Largest trace distance between clean and corrupted `(A, Cⱼ)` states
    /// conditioned on a `Ψ±` outcome. Not bound by contraction.
    pub conditional_output_trace_distance: f64,
    pub ideal_success_rate: f64,
    pub noisy_success_rate: f64,
    pub success_rate_shift: f64,
    pub trials: u64,
    pub empirical_success_rate: f64,
    pub standard_error: f64,
    /// `output_trace_distance ≤ input_trace_distance` within `1e-9`.
    pub contraction_holds: bool,
}

fn snap(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        0.0
    } else {
        x
    }
}

fn resource_after(prep: &Preparation, ghz: &DensityMatrix) -> Result<DensityMatrix> {
    ghz.apply_kraus(&prep.kraus_operators(), &[QUBIT_S, QUBIT_A, QUBIT_C])
}

/// Conditional success rate and the next input, with `Cⱼ` traced out.
fn advance(input: &DensityMatrix, resource: &DensityMatrix) -> Result<(Vec<DMatrix<C64>>, f64)> {
    let branches = step_branches_unnormalized(&input.tensor(resource))?;
    let p = branches[BellState::PsiMinus as usize].trace().re + branches[BellState::PsiPlus as usize].trace().re;
    Ok((branches, p))
}

fn a_marginal(branch: &DMatrix<C64>) -> Result<DensityMatrix> {
    DensityMatrix::normalized(branch.clone())?.partial_trace(&[QUBIT_A])
}

/// Compares the protocol run on clean GHZ states against one where every
/// GHZ qubit passed through `noise` with strength `epsilon` before the
/// local preparation.
///
/// Distances use an ideal input `|φ±(θ_{N−j+1})⟩` at every step. The
/// success-rate shift propagates the noisy `A` state from step to step, and
/// the Monte Carlo part samples that same noisy chain `trials` times.
pub fn robustness_study(
    config: &ProtocolConfig,
    noise: NoiseKind,
    epsilon: f64,
    trials: u64,
    seed: u64,
) -> Result<RobustnessPoint> {
    let channel = NoiseChannel::new(noise, epsilon)?;
    let ProtocolConfig { m, n, theta, secret_sign, .. } = *config;
    let clean = DensityMatrix::from_pure(&ghz_state());
    let corrupted = channel.apply_all(&clean)?;
    let input_t = trace_distance(&clean, &corrupted)?;

    let mut output_t: f64 = 0.0;
    let mut conditional_t: f64 = 0.0;
    let mut noisy_resources = Vec::new();
    let mut chain_input = DensityMatrix::from_pure(&phi_state(step_angles(1, n, theta)?.0, secret_sign));
    let mut noisy_q = 1.0;
    for j in 1..n {
        let prep = Preparation::new(j, n, theta)?;
        let ideal = resource_after(&prep, &clean)?;
        let noisy = resource_after(&prep, &corrupted)?;
        let x = DensityMatrix::from_pure(&phi_state(step_angles(j, n, theta)?.0, secret_sign));
        let (ideal_b, _) = advance(&x, &ideal)?;
        let (noisy_b, _) = advance(&x, &noisy)?;
        let mut cq = 0.0;
        for (label, (a, b)) in BellState::ALL.iter().zip(ideal_b.iter().zip(&noisy_b)) {
            cq += trace_norm_of_difference(a, b)?;
            if label.is_psi() && a.trace().re > 1e-14 && b.trace().re > 1e-14 {
                let d = trace_distance(&DensityMatrix::normalized(a.clone())?, &DensityMatrix::normalized(b.clone())?)?;
                conditional_t = conditional_t.max(d);
            }
        }
        output_t = output_t.max(cq);

        let (branches, p) = advance(&chain_input, &noisy)?;
        noisy_q *= p;
        if p > 1e-14 {
            let success = &branches[BellState::PsiMinus as usize] + &branches[BellState::PsiPlus as usize];
            chain_input = a_marginal(&success)?;
        }
        noisy_resources.push(noisy);
    }
    let ideal_rate = overall_probability_ghz(m, n, theta)?;
    let noisy_rate = chain_success_probability(m, n, theta, noisy_q.clamp(0.0, 1.0))?;

    let secret = phi_state(theta, secret_sign);
    let reduction = reduction_u(1, n, theta)?;
    let compressed = DensityMatrix::from_pure(&phi_state(step_angles(1, n, theta)?.0, secret_sign));
    let successes = if trials == 0 {
        0
    } else {
        (0..trials)
            .into_par_iter()
            .map(|i| -> Result<u64> {
                let mut rng = trial_rng(seed, i);
                let mut survivors = 0;
                for _ in 0..m {
                    survivors += compress_with(&secret, &reduction, &mut rng)?.succeeded as u32;
                }
                for _ in 0..survivors {
                    let mut input = compressed.clone();
                    let mut done = true;
                    for resource in &noisy_resources {
                        let (branches, _) = advance(&input, resource)?;
                        let probs: Vec<f64> = branches.iter().map(|b| b.trace().re.max(0.0)).collect();
                        let label = BellState::from_index(sample_index(&probs, &mut rng)?);
                        if !label.is_psi() {
                            done = false;
                            break;
                        }
                        input = a_marginal(&branches[label as usize])?;
                    }
                    if done {
                        return Ok(1);
                    }
                }
                Ok(0)
            })
            .try_reduce(|| 0, |a, b| Ok(a + b))?
    };
    let (empirical, se, _, _) = compare_rate(successes, trials, noisy_rate);

    if output_t > input_t + 1e-9 {
        return Err(Error::OutOfRange(format!(
            "output trace distance {output_t} exceeds input trace distance {input_t}"
        )));
    }
    Ok(RobustnessPoint {
        noise,
        epsilon,
        input_trace_distance: snap(input_t),
        output_trace_distance: snap(output_t),
        conditional_output_trace_distance: snap(conditional_t),
        ideal_success_rate: ideal_rate,
        noisy_success_rate: noisy_rate,
        success_rate_shift: snap(noisy_rate - ideal_rate),
        trials,
        empirical_success_rate: empirical,
        standard_error: se,
        contraction_holds: output_t <= input_t + 1e-9,
    })
}
