use serde::Serialize;

use super::strategy::Strategy;
use super::success_gamma;
use crate::error::Result;

/// Distribution of the total number of output copies produced by a strategy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbabilitySpectrum {
    /// `pmf[x]` is the probability of ending with exactly `x` copies.
    pmf: Vec<f64>,
}

impl ProbabilitySpectrum {
    pub fn from_pmf(pmf: Vec<f64>) -> Self {
        Self { pmf }
    }

    /// A spectrum concentrated on `x`.
    pub fn point_mass(x: usize) -> Self {
        let mut pmf = vec![0.0; x + 1];
        pmf[x] = 1.0;
        Self { pmf }
    }

    pub fn probability(&self, x: usize) -> f64 {
        self.pmf.get(x).copied().unwrap_or(0.0)
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn max_copies(&self) -> usize {
        self.pmf.len().saturating_sub(1)
    }

    /// `(x, P(x))` for every `x` with nonzero probability.
    pub fn support(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.pmf.iter().copied().enumerate().filter(|&(_, p)| p > 0.0)
    }

    pub fn total(&self) -> f64 {
        self.pmf.iter().sum()
    }

    /// Largest pointwise gap between two spectra.
    pub fn max_abs_difference(&self, other: &ProbabilitySpectrum) -> f64 {
        let len = self.pmf.len().max(other.pmf.len());
        (0..len).map(|x| (self.probability(x) - other.probability(x)).abs()).fold(0.0, f64::max)
    }
}

/// Spectrum built by convolving one Bernoulli trial per attempt, each
/// contributing `N` copies with probability `γ_{kN}`.
pub fn spectrum(strategy: &Strategy) -> Result<ProbabilitySpectrum> {
    let mut pmf = vec![1.0];
    for share in strategy.shares() {
        let gamma = success_gamma(share.k, share.n, strategy.theta())?;
        let stride = share.n as usize;
        for _ in 0..share.count {
            let mut next = vec![0.0; pmf.len() + stride];
            for (x, &p) in pmf.iter().enumerate() {
                next[x] += p * (1.0 - gamma);
                next[x + stride] += p * gamma;
            }
            pmf = next;
        }
    }
    Ok(ProbabilitySpectrum { pmf })
}

fn choose(n: u32, k: u32) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Spectrum built by enumerating every vector `(g₁ … g_m)` of per-share
/// success counts and summing the product of binomial weights into
/// `x = Σ gᵢ·Nᵢ`. Exponential in the number of shares; kept as an
/// independent cross-check of [`spectrum`].
pub fn spectrum_by_enumeration(strategy: &Strategy) -> Result<ProbabilitySpectrum> {
    let shares = strategy.shares();
    let gammas = shares
        .iter()
        .map(|s| success_gamma(s.k, s.n, strategy.theta()))
        .collect::<Result<Vec<f64>>>()?;
    let mut pmf = vec![0.0; strategy.max_output() as usize + 1];
    let mut g = vec![0u32; shares.len()];
    loop {
        let mut weight = 1.0;
        let mut x = 0usize;
        for ((s, &gi), &gamma) in shares.iter().zip(&g).zip(&gammas) {
            weight *= choose(s.count, gi) * gamma.powi(gi as i32) * (1.0 - gamma).powi((s.count - gi) as i32);
            x += (gi * s.n) as usize;
        }
        pmf[x] += weight;
        // mixed-radix increment
        let mut i = 0;
        loop {
            if i == g.len() {
                return Ok(ProbabilitySpectrum { pmf });
            }
            if g[i] < shares[i].count {
                g[i] += 1;
                break;
            }
            g[i] = 0;
            i += 1;
        }
    }
}

/// `E = Σ x·P(x)`.
pub fn expected_copies(spectrum: &ProbabilitySpectrum) -> f64 {
    spectrum.pmf.iter().enumerate().map(|(x, p)| x as f64 * p).sum()
}

/// `F(K) = Σ_{x<K} P(x)`.
pub fn failure_probability(spectrum: &ProbabilitySpectrum, goal: u32) -> f64 {
    spectrum.pmf.iter().take(goal as usize).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::CloneShare;
    use std::f64::consts::{FRAC_PI_4, FRAC_PI_6};

    fn strat(dsl: &str, theta: f64) -> Strategy {
        Strategy::parse(dsl, theta, 1).unwrap()
    }

    #[test]
    fn orthogonal_single_share_is_point_mass() {
        let s = spectrum(&strat("1x(4->7)", FRAC_PI_4)).unwrap();
        assert!((s.probability(7) - 1.0).abs() < 1e-15);
        assert_eq!(s.support().count(), 1);
    }

    #[test]
    fn two_one_to_two_attempts() {
        // γ = 2/3: P(0) = 1/9, P(2) = 4/9, P(4) = 4/9
        for s in [
            spectrum(&strat("2x(1->2)", FRAC_PI_6)).unwrap(),
            spectrum_by_enumeration(&strat("2x(1->2)", FRAC_PI_6)).unwrap(),
        ] {
            assert!((s.probability(0) - 1.0 / 9.0).abs() < 1e-12);
            assert!((s.probability(2) - 4.0 / 9.0).abs() < 1e-12);
            assert!((s.probability(4) - 4.0 / 9.0).abs() < 1e-12);
            assert!((s.total() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mixed_strategy_support() {
        let st = strat("1x(2->3),1x(1->3)", 0.4);
        let a = spectrum(&st).unwrap();
        let support: Vec<usize> = a.support().map(|(x, _)| x).collect();
        assert_eq!(support, vec![0, 3, 6]);
        // brute force over (g₁, g₂) ∈ {0,1}²
        let g1 = success_gamma(1, 3, 0.4).unwrap();
        let g2 = success_gamma(2, 3, 0.4).unwrap();
        assert!((a.probability(0) - (1.0 - g1) * (1.0 - g2)).abs() < 1e-15);
        assert!((a.probability(3) - (g1 * (1.0 - g2) + g2 * (1.0 - g1))).abs() < 1e-15);
        assert!((a.probability(6) - g1 * g2).abs() < 1e-15);
        assert!((a.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn expectation_and_failure_closed_forms() {
        for &theta in &[0.05, 0.3, FRAC_PI_6, 0.7] {
            let (m, n) = (4u32, 9u32);
            let g1n = success_gamma(1, n, theta).unwrap();
            let gmn = success_gamma(m, n, theta).unwrap();
            let many = spectrum(&Strategy::new(&[CloneShare::new(1, n, m).unwrap()], theta, n).unwrap()).unwrap();
            assert!((expected_copies(&many) - (m * n) as f64 * g1n).abs() < 1e-12);
            let t = (2.0 * theta).cos();
            let f2 = ((t - t.powi(n as i32)) / (1.0 - t.powi(n as i32))).powi(m as i32);
            assert!((failure_probability(&many, n) - f2).abs() < 1e-12);

            let whole = spectrum(&Strategy::new(&[CloneShare::new(m, n, 1).unwrap()], theta, n).unwrap()).unwrap();
            assert!((expected_copies(&whole) - n as f64 * gmn).abs() < 1e-12);
            let f1 = t.powi(m as i32) * (1.0 - t.powi((n - m) as i32)) / (1.0 - t.powi(n as i32));
            assert!((failure_probability(&whole, n) - f1).abs() < 1e-12);
        }
    }

    #[test]
    fn trivial_expectation_and_failure() {
        let s = ProbabilitySpectrum::point_mass(5);
        assert_eq!(expected_copies(&s), 5.0);
        assert_eq!(failure_probability(&s, 0), 0.0);
        assert_eq!(failure_probability(&s, 6), 1.0);
    }
}
