//! The telecloning protocol: `M` input copies are compressed one by one
//! into `|φ±(θ_N)⟩`, and a surviving compressed copy is split into `N`
//! copies by `N − 1` teleclone steps. Each step consumes one three-qubit
//! resource `(S, A, Cⱼ)` and one Bell measurement.

mod resource;
mod robustness;
mod step;
mod trial;

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

pub use resource::{
    alpha_state, branch_probabilities, ghz_state, ideal_resource, ideal_resource_with, kappa,
    odd_parity_resource, port_states, port_states_with, prepare_from_ghz, preparation_branches,
    resource_mixture, rotate_ghz, step_angles, ResourceState, QUBIT_A, QUBIT_C, QUBIT_S,
};
pub use robustness::{robustness_study, RobustnessPoint};
pub use step::{
    bell_components, chain_success_probability, compress_copy, overall_probability, overall_probability_ghz,
    step_on_mixture, step_probability, teleclone_step, Compression, FailureReason, StepOutcome, StepResult,
    QUBIT_X,
};
pub use trial::{
    run_trial, simulate, simulate_step, trial_rng, BellCounts, ReferenceRates, ResourceTotals, SessionReport,
    StepLog, StepRate, TrialRecord,
};

use crate::analytics::check_angle;
use crate::error::{Error, Result};
use crate::gates::{Completion, Sign};

/// Success probability of a teleported CNOT, quoted for comparison.
pub const TELE_CNOT_SUCCESS: f64 = 1.0 / 8.0;
/// Success probability of a D gate built from three teleported CNOTs.
pub const THREE_CNOT_D_SUCCESS: f64 = 1.0 / 512.0;

/// Where each step's resource comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PrepMode {
    /// The resource is handed over exactly.
    Ideal,
    /// The resource is prepared from a GHZ state by local operations and
    /// may land in either parity class.
    Ghz,
}

/// Which Bell outcomes the detector can resolve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BellDetector {
    Full,
    /// Only `Ψ±` are identified.
    Interferometric,
}

macro_rules! keyword_enum {
    ($ty:ty, $what:literal, $($text:literal => $val:expr),+) => {
        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s.to_ascii_lowercase().as_str() {
                    $($text => Ok($val),)+
                    other => Err(Error::OutOfRange(format!(concat!("unknown ", $what, " `{}`"), other))),
                }
            }
        }
    };
}

keyword_enum!(PrepMode, "preparation mode", "ideal" => PrepMode::Ideal, "ghz" => PrepMode::Ghz);
keyword_enum!(BellDetector, "Bell detector", "full" => BellDetector::Full, "interferometric" => BellDetector::Interferometric);

impl fmt::Display for PrepMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PrepMode::Ideal => "ideal",
            PrepMode::Ghz => "ghz",
        })
    }
}

impl fmt::Display for BellDetector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BellDetector::Full => "full",
            BellDetector::Interferometric => "interferometric",
        })
    }
}

/// Largest target count the simulator accepts.
pub const MAX_TARGET: u32 = 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProtocolConfig {
    pub m: u32,
    pub n: u32,
    pub theta: f64,
    /// Which of `|φ±(θ)⟩` is being cloned. Only the verifier reads it.
    pub secret_sign: Sign,
    pub prep_mode: PrepMode,
    pub bell_detector: BellDetector,
    /// Completion of the D gate behind the ideal resource.
    #[serde(skip)]
    pub completion: Completion,
}

impl ProtocolConfig {
    pub fn new(m: u32, n: u32, theta: f64) -> Result<Self> {
        if m == 0 || m >= n || n > MAX_TARGET {
            return Err(Error::OutOfRange(format!("need 1 <= M < N <= {MAX_TARGET}, got M={m}, N={n}")));
        }
        let theta = check_angle(theta)?;
        if theta == 0.0 {
            return Err(Error::OutOfRange("protocol needs θ > 0".into()));
        }
        Ok(Self {
            m,
            n,
            theta,
            secret_sign: Sign::Plus,
            prep_mode: PrepMode::Ideal,
            bell_detector: BellDetector::Full,
            completion: Completion::default(),
        })
    }

    pub fn with_sign(self, secret_sign: Sign) -> Self {
        Self { secret_sign, ..self }
    }

    pub fn with_prep(self, prep_mode: PrepMode) -> Self {
        Self { prep_mode, ..self }
    }

    pub fn with_detector(self, bell_detector: BellDetector) -> Self {
        Self { bell_detector, ..self }
    }

    pub fn with_completion(self, completion: Completion) -> Self {
        Self { completion, ..self }
    }

    /// Overall success probability for this configuration's resource mode.
    pub fn analytic_success_rate(&self) -> Result<f64> {
        match self.prep_mode {
            PrepMode::Ideal => overall_probability(self.m, self.n, self.theta),
            PrepMode::Ghz => overall_probability_ghz(self.m, self.n, self.theta),
        }
    }

    /// Success probability of step `j` for this configuration's resource mode.
    pub fn analytic_step_rate(&self, j: u32) -> Result<f64> {
        match self.prep_mode {
            PrepMode::Ideal => {
                resource::check_step(j, self.n, self.theta)?;
                Ok(0.5)
            }
            PrepMode::Ghz => step_probability(j, self.n, self.theta),
        }
    }
}
