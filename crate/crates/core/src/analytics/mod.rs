//! Closed-form mathematics of probabilistic cloning strategies.
//!
//! Input states are drawn from `{cos θ|1⟩ ± sin θ|0⟩}` with `θ ∈ [0, π/4]`;
//! everything here is expressed through the overlap `t = cos 2θ`.

mod spectrum;
mod strategy;

use std::f64::consts::FRAC_PI_4;

use serde::Serialize;

pub use spectrum::{
    expected_copies, failure_probability, spectrum, spectrum_by_enumeration, ProbabilitySpectrum,
};
pub use strategy::{parse_shares, render_shares, CloneShare, Strategy};

use crate::error::{Error, Result};

/// Angles this far above π/4 are accepted and clamped to π/4, so that
/// rounded inputs such as `0.7854` still mean "orthogonal states".
pub const ANGLE_SLACK: f64 = 1e-5;

/// Validates `θ ∈ [0, π/4]` and returns it, clamped within [`ANGLE_SLACK`].
pub fn check_angle(theta: f64) -> Result<f64> {
    if !(0.0..=FRAC_PI_4 + ANGLE_SLACK).contains(&theta) {
        return Err(Error::OutOfRange(format!("angle {theta} outside [0, π/4]")));
    }
    Ok(theta.min(FRAC_PI_4))
}

/// The overlap `t = cos 2θ = 1 − 2 sin²θ`, clamped to `[0, 1]`.
pub fn overlap(theta: f64) -> f64 {
    if theta >= FRAC_PI_4 {
        return 0.0;
    }
    let s = theta.sin();
    (1.0 - 2.0 * s * s).clamp(0.0, 1.0)
}

/// `1 − tᵏ`, accurate when `t` is close to one.
pub(crate) fn one_minus_overlap_pow(theta: f64, k: u32) -> f64 {
    let s = theta.sin();
    let x = 2.0 * s * s;
    if x >= 1.0 || theta >= FRAC_PI_4 {
        return 1.0;
    }
    -(k as f64 * (-x).ln_1p()).exp_m1()
}

/// `θⱼ` with `cos 2θⱼ = (cos 2θ)ʲ`, the angle of a state pair whose overlap
/// equals that of `j` copies of the original pair.
pub fn chain_angle(theta: f64, j: u32) -> Result<f64> {
    let theta = check_angle(theta)?;
    if j == 0 {
        return Err(Error::OutOfRange("chain index must be positive".into()));
    }
    if j == 1 {
        return Ok(theta);
    }
    // 1 − t^j = 2 sin²θⱼ keeps precision for small θ.
    let s = (one_minus_overlap_pow(theta, j) / 2.0).sqrt().min(1.0);
    Ok(s.asin().min(FRAC_PI_4))
}

/// Success probability of `k → N` probabilistic cloning:
/// `γ = (1 − tᵏ)/(1 − tᴺ)`, with the `θ = 0` limit `k/N`.
pub fn success_gamma(k: u32, n: u32, theta: f64) -> Result<f64> {
    if k == 0 || k > n {
        return Err(Error::OutOfRange(format!("need 1 <= k <= N, got k={k}, N={n}")));
    }
    let theta = check_angle(theta)?;
    if k == n {
        return Ok(1.0);
    }
    if theta == 0.0 {
        return Ok(k as f64 / n as f64);
    }
    Ok((one_minus_overlap_pow(theta, k) / one_minus_overlap_pow(theta, n)).min(1.0))
}

/// Expected copies and failure probabilities of the two headline
/// strategies: one `M → N` attempt (`e1`, `f1`) versus `M` separate
/// `1 → N` attempts (`e2`, `f2`), both with goal `K = N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StrategyComparison {
    pub e1: f64,
    pub e2: f64,
    pub f1: f64,
    pub f2: f64,
}

pub fn compare_strategies(m: u32, n: u32, theta: f64) -> Result<StrategyComparison> {
    if m < 2 || m >= n {
        return Err(Error::OutOfRange(format!("need 2 <= M < N, got M={m}, N={n}")));
    }
    let g_mn = success_gamma(m, n, theta)?;
    let g_1n = success_gamma(1, n, theta)?;
    Ok(StrategyComparison {
        e1: n as f64 * g_mn,
        e2: (m * n) as f64 * g_1n,
        f1: 1.0 - g_mn,
        f2: (1.0 - g_1n).powi(m as i32),
    })
}
