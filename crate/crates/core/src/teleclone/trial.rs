use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::resource::{ideal_resource_with, step_angles, Preparation, ResourceState};
use super::step::{compress_with, teleclone_step, FailureReason, StepResult};
use super::{PrepMode, ProtocolConfig, TELE_CNOT_SUCCESS, THREE_CNOT_D_SUCCESS};
use crate::error::{Error, Result};
use crate::gates::{phi_state, reduction_u, BellState};
use crate::statekit::{fidelity, StateVector, UnitaryGate};

/// The RNG for trial `index` under `seed`: one ChaCha stream per trial, so
/// trials can run in any order or in parallel.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StepLog {
    /// Which compressed copy (0-based) this chain was started from.
    pub chain: u32,
    pub j: u32,
    pub bell: BellState,
    /// Parity class of the resource used; always `+1` with ideal resources.
    pub parity: i8,
    pub failure: Option<FailureReason>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub succeeded: bool,
    /// `N` on success, else 0.
    pub copies_delivered: u32,
    pub compressions_succeeded: u32,
    /// Compressed copies left unused after a successful chain.
    pub surplus_compressed: u32,
    pub chains_attempted: u32,
    pub ghz_consumed: u32,
    pub bell_measurements: u32,
    pub steps: Vec<StepLog>,
    /// Fidelity of `C₁ … C_{N−1}` and the final `A` with the secret input.
    pub final_clone_fidelities: Vec<f64>,
}

/// Per-configuration constants shared by every trial.
pub(crate) struct Engine {
    config: ProtocolConfig,
    secret: StateVector,
    reduction: UnitaryGate,
    ideal: Vec<ResourceState>,
    prep: Vec<Preparation>,
}

impl Engine {
    pub(crate) fn new(config: &ProtocolConfig) -> Result<Self> {
        let ProtocolConfig { n, theta, .. } = *config;
        let steps = 1..n;
        Ok(Self {
            config: *config,
            secret: phi_state(theta, config.secret_sign),
            reduction: reduction_u(1, n, theta)?,
            ideal: steps.clone().map(|j| ideal_resource_with(j, n, theta, config.completion)).collect::<Result<_>>()?,
            prep: steps.map(|j| Preparation::new(j, n, theta)).collect::<Result<_>>()?,
        })
    }

    fn resource<R: Rng + ?Sized>(&self, j: u32, rng: &mut R) -> Result<ResourceState> {
        let i = (j - 1) as usize;
        match self.config.prep_mode {
            PrepMode::Ideal => Ok(self.ideal[i].clone()),
            PrepMode::Ghz => self.prep[i].sample(rng),
        }
    }

    pub(crate) fn run<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<TrialRecord> {
        let n = self.config.n;
        let mut survivors = Vec::new();
        for _ in 0..self.config.m {
            let c = compress_with(&self.secret, &self.reduction, rng)?;
            if c.succeeded {
                survivors.push(c.state);
            }
        }
        let mut record = TrialRecord {
            succeeded: false,
            copies_delivered: 0,
            compressions_succeeded: survivors.len() as u32,
            surplus_compressed: 0,
            chains_attempted: 0,
            ghz_consumed: 0,
            bell_measurements: 0,
            steps: Vec::new(),
            final_clone_fidelities: Vec::new(),
        };
        for (chain, copy) in survivors.iter().enumerate() {
            record.chains_attempted += 1;
            let mut input = copy.clone();
            let mut clones = Vec::with_capacity(n as usize);
            for j in 1..n {
                let resource = self.resource(j, rng)?;
                record.ghz_consumed += 1;
                record.bell_measurements += 1;
                let out = teleclone_step(&input, &resource, self.config.bell_detector, rng)?;
                let failure = match &out.result {
                    StepResult::Failure(reason) => Some(*reason),
                    StepResult::Success { .. } => None,
                };
                record.steps.push(StepLog { chain: chain as u32, j, bell: out.bell, parity: resource.parity, failure });
                match out.result {
                    StepResult::Success { a, c } => {
                        clones.push(c);
                        input = a;
                    }
                    StepResult::Failure(_) => break,
                }
            }
            if clones.len() == (n - 1) as usize {
                // The last A travels on to the N-th receiver.
                clones.push(input);
                record.succeeded = true;
                record.copies_delivered = n;
                record.surplus_compressed = (survivors.len() - chain - 1) as u32;
                record.final_clone_fidelities =
                    clones.iter().map(|c| fidelity(c, &self.secret)).collect::<Result<_>>()?;
                break;
            }
        }
        Ok(record)
    }
}

/// Runs the whole protocol once.
pub fn run_trial<R: Rng + ?Sized>(config: &ProtocolConfig, rng: &mut R) -> Result<TrialRecord> {
    Engine::new(config)?.run(rng)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct BellCounts {
    pub psi_minus: u64,
    pub psi_plus: u64,
    pub phi_minus: u64,
    pub phi_plus: u64,
}

impl BellCounts {
    fn add(&mut self, b: BellState) {
        match b {
            BellState::PsiMinus => self.psi_minus += 1,
            BellState::PsiPlus => self.psi_plus += 1,
            BellState::PhiMinus => self.phi_minus += 1,
            BellState::PhiPlus => self.phi_plus += 1,
        }
    }

    fn merge(self, o: Self) -> Self {
        Self {
            psi_minus: self.psi_minus + o.psi_minus,
            psi_plus: self.psi_plus + o.psi_plus,
            phi_minus: self.phi_minus + o.phi_minus,
            phi_plus: self.phi_plus + o.phi_plus,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ResourceTotals {
    pub ghz_consumed: u64,
    pub bell_measurements: u64,
    pub compressions_attempted: u64,
    pub compressions_succeeded: u64,
    pub chains_attempted: u64,
    pub completed_chains: u64,
    pub surplus_compressed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepRate {
    pub j: u32,
    pub attempts: u64,
    pub successes: u64,
    pub empirical: f64,
    pub standard_error: f64,
    pub analytic: f64,
    pub within_three_sigma: bool,
}

/// Success rates of comparable gate-teleportation constructions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceRates {
    pub tele_cnot: f64,
    pub three_cnot_d_gate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionReport {
    pub config: ProtocolConfig,
    pub trials: u64,
    pub seed: u64,
    pub successes: u64,
    pub empirical_success_rate: f64,
    /// Binomial standard error of the empirical rate.
    pub standard_error: f64,
    pub analytic_success_rate: f64,
    /// `|empirical − analytic|` in units of the analytic binomial σ.
    pub deviation_sigmas: f64,
    pub within_three_sigma: bool,
    pub per_step_rates: Vec<StepRate>,
    pub resources: ResourceTotals,
    /// Every successful trial used exactly `N − 1` resources and Bell
    /// measurements on its completed chain, and no trial used more than
    /// `N − 1` per chain.
    pub ledger_consistent: bool,
    pub bell_outcomes: BellCounts,
    /// Smallest clone fidelity over all successful trials.
    pub min_clone_fidelity: Option<f64>,
    pub reference_rates: ReferenceRates,
}

#[derive(Debug, Clone, Default)]
struct Tally {
    trials: u64,
    successes: u64,
    step_attempts: Vec<u64>,
    step_successes: Vec<u64>,
    resources: ResourceTotals,
    ledger_consistent: bool,
    bell: BellCounts,
    min_fidelity: Option<f64>,
}

impl Tally {
    fn empty(steps: usize) -> Self {
        Self { step_attempts: vec![0; steps], step_successes: vec![0; steps], ledger_consistent: true, ..Self::default() }
    }

    fn record(steps: usize, m: u32, r: &TrialRecord) -> Self {
        let mut t = Self::empty(steps);
        t.trials = 1;
        t.successes = r.succeeded as u64;
        for s in &r.steps {
            let i = (s.j - 1) as usize;
            t.step_attempts[i] += 1;
            t.step_successes[i] += s.failure.is_none() as u64;
            t.bell.add(s.bell);
        }
        t.resources = ResourceTotals {
            ghz_consumed: r.ghz_consumed as u64,
            bell_measurements: r.bell_measurements as u64,
            compressions_attempted: m as u64,
            compressions_succeeded: r.compressions_succeeded as u64,
            chains_attempted: r.chains_attempted as u64,
            completed_chains: r.succeeded as u64,
            surplus_compressed: r.surplus_compressed as u64,
        };
        let per_chain_ok = r.ghz_consumed == r.bell_measurements
            && r.ghz_consumed as usize == r.steps.len()
            && r.ghz_consumed as usize <= steps * r.chains_attempted as usize;
        let last_chain_ok = !r.succeeded || {
            let last = r.chains_attempted - 1;
            r.steps.iter().filter(|s| s.chain == last).count() == steps
        };
        t.ledger_consistent = per_chain_ok && last_chain_ok;
        if r.succeeded {
            t.min_fidelity = r.final_clone_fidelities.iter().copied().reduce(f64::min);
        }
        t
    }

    fn merge(self, o: Self) -> Self {
        let add = |a: Vec<u64>, b: Vec<u64>| a.into_iter().zip(b).map(|(x, y)| x + y).collect();
        let (ra, rb) = (self.resources, o.resources);
        Self {
            trials: self.trials + o.trials,
            successes: self.successes + o.successes,
            step_attempts: add(self.step_attempts, o.step_attempts),
            step_successes: add(self.step_successes, o.step_successes),
            resources: ResourceTotals {
                ghz_consumed: ra.ghz_consumed + rb.ghz_consumed,
                bell_measurements: ra.bell_measurements + rb.bell_measurements,
                compressions_attempted: ra.compressions_attempted + rb.compressions_attempted,
                compressions_succeeded: ra.compressions_succeeded + rb.compressions_succeeded,
                chains_attempted: ra.chains_attempted + rb.chains_attempted,
                completed_chains: ra.completed_chains + rb.completed_chains,
                surplus_compressed: ra.surplus_compressed + rb.surplus_compressed,
            },
            ledger_consistent: self.ledger_consistent && o.ledger_consistent,
            bell: self.bell.merge(o.bell),
            min_fidelity: match (self.min_fidelity, o.min_fidelity) {
                (Some(a), Some(b)) => Some(a.min(b)),
                (a, b) => a.or(b),
            },
        }
    }
}

/// Empirical rate, its standard error, and whether it sits within three
/// analytic standard deviations of `analytic`.
pub(crate) fn compare_rate(successes: u64, attempts: u64, analytic: f64) -> (f64, f64, f64, bool) {
    if attempts == 0 {
        return (0.0, 0.0, 0.0, true);
    }
    let n = attempts as f64;
    let empirical = successes as f64 / n;
    let se = (empirical * (1.0 - empirical) / n).sqrt();
    let sigma = (analytic * (1.0 - analytic) / n).sqrt();
    let gap = (empirical - analytic).abs();
    let sigmas = if sigma > 0.0 { gap / sigma } else if gap < 1e-12 { 0.0 } else { f64::INFINITY };
    (empirical, se, sigmas, gap <= 3.0 * sigma + 1e-12)
}

fn check_trials(trials: u64) -> Result<()> {
    if trials == 0 {
        return Err(Error::OutOfRange("need at least one trial".into()));
    }
    Ok(())
}

/// Runs `trials` independent protocol trials in parallel and aggregates
/// them in a fixed order; the report depends only on `config`, `trials`
/// and `seed`.
pub fn simulate(config: &ProtocolConfig, trials: u64, seed: u64) -> Result<SessionReport> {
    check_trials(trials)?;
    let engine = Engine::new(config)?;
    let steps = (config.n - 1) as usize;
    let tally = (0..trials)
        .into_par_iter()
        .map(|i| engine.run(&mut trial_rng(seed, i)).map(|r| Tally::record(steps, config.m, &r)))
        .try_reduce(|| Tally::empty(steps), |a, b| Ok(a.merge(b)))?;

    let analytic = config.analytic_success_rate()?;
    let (empirical, se, sigmas, ok) = compare_rate(tally.successes, tally.trials, analytic);
    let per_step_rates = (1..config.n)
        .map(|j| {
            let i = (j - 1) as usize;
            let analytic = config.analytic_step_rate(j)?;
            let (empirical, standard_error, _, within) =
                compare_rate(tally.step_successes[i], tally.step_attempts[i], analytic);
            Ok(StepRate {
                j,
                attempts: tally.step_attempts[i],
                successes: tally.step_successes[i],
                empirical,
                standard_error,
                analytic,
                within_three_sigma: within,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SessionReport {
        config: *config,
        trials,
        seed,
        successes: tally.successes,
        empirical_success_rate: empirical,
        standard_error: se,
        analytic_success_rate: analytic,
        deviation_sigmas: sigmas,
        within_three_sigma: ok,
        per_step_rates,
        resources: tally.resources,
        ledger_consistent: tally.ledger_consistent,
        bell_outcomes: tally.bell,
        min_clone_fidelity: tally.min_fidelity,
        reference_rates: ReferenceRates { tele_cnot: TELE_CNOT_SUCCESS, three_cnot_d_gate: THREE_CNOT_D_SUCCESS },
    })
}

/// Monte Carlo of step `j` alone: a fresh resource and a fresh input
/// `|φ±(θ_{N−j+1})⟩` per trial.
pub fn simulate_step(config: &ProtocolConfig, j: u32, trials: u64, seed: u64) -> Result<StepRate> {
    check_trials(trials)?;
    let engine = Engine::new(config)?;
    let (theta_in, _, _) = step_angles(j, config.n, config.theta)?;
    let input = phi_state(theta_in, config.secret_sign);
    let successes = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i);
            let resource = engine.resource(j, &mut rng)?;
            Ok(teleclone_step(&input, &resource, config.bell_detector, &mut rng)?.succeeded() as u64)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    let analytic = config.analytic_step_rate(j)?;
    let (empirical, standard_error, _, within_three_sigma) = compare_rate(successes, trials, analytic);
    Ok(StepRate { j, attempts: trials, successes, empirical, standard_error, analytic, within_three_sigma })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::{Completion, Sign};
    use crate::teleclone::BellDetector;
    use std::f64::consts::{FRAC_PI_4, FRAC_PI_6};

    #[test]
    fn orthogonal_single_copy_trials() {
        let config = ProtocolConfig::new(1, 2, FRAC_PI_4).unwrap();
        let mut rng = trial_rng(5, 0);
        let mut wins = 0;
        for _ in 0..200 {
            let r = run_trial(&config, &mut rng).unwrap();
            assert_eq!(r.compressions_succeeded, 1);
            if r.succeeded {
                wins += 1;
                assert_eq!((r.ghz_consumed, r.bell_measurements, r.copies_delivered), (1, 1, 2));
                assert!(r.final_clone_fidelities.iter().all(|f| (f - 1.0).abs() < 1e-9));
            }
        }
        assert!(wins > 60 && wins < 140);
    }

    #[test]
    fn session_is_deterministic() {
        let config = ProtocolConfig::new(2, 3, FRAC_PI_6).unwrap().with_prep(PrepMode::Ghz);
        let a = simulate(&config, 2000, 17).unwrap();
        let b = simulate(&config, 2000, 17).unwrap();
        assert_eq!(a, b);
        assert!(a.ledger_consistent);
        let c = simulate(&config, 2000, 18).unwrap();
        assert_ne!(a.successes, c.successes);
    }

    #[test]
    fn secret_does_not_steer_the_protocol() {
        for prep in [PrepMode::Ideal, PrepMode::Ghz] {
            let base = ProtocolConfig::new(2, 4, 0.5).unwrap().with_prep(prep);
            for i in 0..200 {
                let plus = run_trial(&base.with_sign(Sign::Plus), &mut trial_rng(3, i)).unwrap();
                let minus = run_trial(&base.with_sign(Sign::Minus), &mut trial_rng(3, i)).unwrap();
                assert_eq!(plus.steps, minus.steps);
                assert_eq!(
                    (plus.succeeded, plus.ghz_consumed, plus.compressions_succeeded),
                    (minus.succeeded, minus.ghz_consumed, minus.compressions_succeeded)
                );
                for f in plus.final_clone_fidelities.iter().chain(&minus.final_clone_fidelities) {
                    assert!((f - 1.0).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn completion_does_not_matter() {
        let base = ProtocolConfig::new(1, 3, 0.4).unwrap();
        let a = simulate(&base, 3000, 8).unwrap();
        let b = simulate(&base.with_completion(Completion::Reversed), 3000, 8).unwrap();
        assert_eq!(a.successes, b.successes);
        assert_eq!(a.bell_outcomes, b.bell_outcomes);
        assert!(b.min_clone_fidelity.unwrap() > 1.0 - 1e-9);
    }

    #[test]
    fn interferometric_detector_labels_failures() {
        let config = ProtocolConfig::new(1, 2, FRAC_PI_4).unwrap().with_detector(BellDetector::Interferometric);
        let mut rng = trial_rng(1, 1);
        let mut saw_failure = false;
        for _ in 0..50 {
            for s in run_trial(&config, &mut rng).unwrap().steps {
                if let Some(reason) = s.failure {
                    saw_failure = true;
                    assert_eq!(reason, FailureReason::DetectorInconclusive);
                }
            }
        }
        assert!(saw_failure);
    }

    #[test]
    fn step_monte_carlo_tracks_closed_form() {
        let config = ProtocolConfig::new(1, 3, 0.3).unwrap().with_prep(PrepMode::Ghz);
        for j in 1..3 {
            let rate = simulate_step(&config, j, 4000, 2).unwrap();
            assert!(rate.within_three_sigma, "{rate:?}");
        }
    }
}
