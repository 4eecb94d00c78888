//! Finite-size secure score threshold Γ₀.
//!
//! Γ₀ = S₀ᵘ + S₁ᵘ + S₂₊ᵘ, the largest score a dishonest prover can reach except
//! with probability 5ε, split by the photon-number class of the pulses:
//!
//! * vacuum rounds carry no information; the adversary picks how many of them
//!   to answer (`x`) and a Chernoff bound caps the score of those guesses;
//! * single-photon rounds are perfectly attacked on at most `N_ξ` rounds (the
//!   response-mismatch budget) and Azuma-bounded on the rest;
//! * multi-photon rounds are assumed to be answered correctly every time.
//!
//! Class counts themselves fluctuate around their Poisson means, so the
//! threshold is evaluated at Chernoff bounds `(N₀ˡ, N₁ᵘ, N₂₊ᵘ)`.

use serde::{Deserialize, Serialize};

use crate::error::{check_closed, check_open, domain, Result};
use crate::photon_stats::{poisson_class_probs, Intensity};

/// Score weights (γ_c, γ_⊥, γ_I) of Γ = γ_c·n_c − γ_⊥·n_⊥ − γ_I·n_I.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreCoefficients {
    pub gamma_c: f64,
    pub gamma_perp: f64,
    pub gamma_i: f64,
}

impl ScoreCoefficients {
    /// Published weights for a mismatch bound ξ = 0.001.
    pub const PUBLISHED: Self = Self {
        gamma_c: 0.04275,
        gamma_perp: 0.05019,
        gamma_i: 1.0,
    };

    pub fn new(gamma_c: f64, gamma_perp: f64, gamma_i: f64) -> Result<Self> {
        let c = Self {
            gamma_c,
            gamma_perp,
            gamma_i,
        };
        c.validate()?;
        Ok(c)
    }

    /// The Azuma step needs every weight bounded by 1 in magnitude.
    pub fn validate(&self) -> Result<()> {
        check_closed("gamma_c", self.gamma_c, -1.0, 1.0)?;
        check_closed("gamma_perp", self.gamma_perp, -1.0, 1.0)?;
        check_closed("gamma_i", self.gamma_i, -1.0, 1.0)?;
        Ok(())
    }
}

impl Default for ScoreCoefficients {
    fn default() -> Self {
        Self::PUBLISHED
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecurityParams {
    /// Failure probability of each of the five probabilistic inequalities.
    pub epsilon: f64,
    /// Bound on the probability of answering the two verifiers differently.
    pub xi: f64,
}

impl SecurityParams {
    pub const DEFAULT: Self = Self {
        epsilon: 1e-10,
        xi: 0.001,
    };

    pub fn new(epsilon: f64, xi: f64) -> Result<Self> {
        let s = Self { epsilon, xi };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        check_open("epsilon", self.epsilon, 0.0, 1.0)?;
        check_open("xi", self.xi, 0.0, 1.0)?;
        Ok(())
    }

    fn log_inv_eps(&self) -> f64 {
        (1.0 / self.epsilon).ln()
    }
}

impl Default for SecurityParams {
    fn default() -> Self {
        Self::DEFAULT
    }
}

/// Chernoff bounds on the photon-class round counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassBounds {
    pub n0_lower: f64,
    pub n1_upper: f64,
    pub n2plus_upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub bounds: ClassBounds,
    pub s0_upper: f64,
    pub s1_upper: f64,
    pub s2plus_upper: f64,
    pub gamma0: f64,
    pub x_star: f64,
    pub n_xi: u64,
    pub total_failure_prob: f64,
}

fn log_inv(eps: f64) -> Result<f64> {
    check_open("epsilon", eps, 0.0, 1.0)?;
    Ok((1.0 / eps).ln())
}

/// Chernoff bound on the response score of a vacuum-round adversary that
/// answers `x` of its `n0` vacuum rounds.
pub fn vacuum_score_upper_at(x: f64, n0: f64, coeffs: &ScoreCoefficients, eps: f64) -> Result<f64> {
    let l = log_inv(eps)?;
    if !(n0.is_finite() && n0 >= 0.0) {
        return Err(domain("n0", n0, "vacuum round count must be >= 0"));
    }
    if !(x.is_finite() && x >= 0.0 && x <= n0) {
        return Err(domain("x", x, "response count must lie in [0, n0]"));
    }
    Ok(vacuum_at(x, n0, coeffs, l))
}

fn vacuum_at(x: f64, n0: f64, c: &ScoreCoefficients, l: f64) -> f64 {
    (c.gamma_c - c.gamma_i) / 2.0 * x + (c.gamma_c + c.gamma_i) / 2.0 * (l + (l * l + 4.0 * l * x).sqrt())
        - (n0 - x) * c.gamma_perp
}

/// Stationary point of [`vacuum_score_upper_at`] in `x` (unclamped).
pub fn vacuum_stationary_x(coeffs: &ScoreCoefficients, eps: f64) -> Result<f64> {
    let l = log_inv(eps)?;
    Ok(stationary_x(coeffs, l))
}

fn stationary_x(c: &ScoreCoefficients, l: f64) -> f64 {
    let slope = c.gamma_c - c.gamma_i + 2.0 * c.gamma_perp;
    -0.25 * l + (c.gamma_c + c.gamma_i).powi(2) / (slope * slope) * l
}

/// S₀ᵘ: the maximum of the vacuum bound over `x ∈ [0, n0]`, with its maximizer.
///
/// The bound is `a·x + b·√(L² + 4Lx) + const`, so its maximum over an interval
/// sits at the clamped stationary point or at an endpoint.
pub fn vacuum_score_upper(n0: f64, coeffs: &ScoreCoefficients, eps: f64) -> Result<(f64, f64)> {
    let l = log_inv(eps)?;
    if !(n0.is_finite() && n0 >= 0.0) {
        return Err(domain("n0", n0, "vacuum round count must be >= 0"));
    }
    Ok(vacuum_max(n0, coeffs, l))
}

fn vacuum_max(n0: f64, c: &ScoreCoefficients, l: f64) -> (f64, f64) {
    let mut candidates = vec![0.0, n0];
    let xs = stationary_x(c, l);
    if xs.is_finite() {
        candidates.push(xs.clamp(0.0, n0));
    }
    candidates
        .into_iter()
        .map(|x| (vacuum_at(x, n0, c, l), x))
        .fold((f64::NEG_INFINITY, 0.0), |best, cand| if cand.0 > best.0 { cand } else { best })
}

/// Closed form of S₀ᵘ valid when γ_c + 2γ_⊥ − γ_I < 0 and the maximizer is
/// interior; `None` outside that branch.
pub fn vacuum_score_closed_form(n0: f64, coeffs: &ScoreCoefficients, eps: f64) -> Result<Option<f64>> {
    let l = log_inv(eps)?;
    let c = coeffs;
    let denom = c.gamma_c + 2.0 * c.gamma_perp - c.gamma_i;
    let xs = stationary_x(c, l);
    if !(denom < 0.0 && xs > 0.0 && xs < n0) {
        return Ok(None);
    }
    let num = (c.gamma_c - 2.0 * c.gamma_perp + 3.0 * c.gamma_i).powi(2) * l;
    Ok(Some(-num / (8.0 * denom) - c.gamma_perp * n0))
}

/// N_ξ = ⌈ln ε / ln(1−ξ)⌉, the rounds on which mismatching answers may hide.
pub fn mismatch_round_cap(eps: f64, xi: f64) -> Result<u64> {
    check_open("epsilon", eps, 0.0, 1.0)?;
    check_open("xi", xi, 0.0, 1.0)?;
    let ratio = eps.ln() / (-xi).ln_1p();
    Ok(ratio.ceil().max(0.0) as u64)
}

/// S₁ᵘ = γ_c·C + √(2 ln(1/ε) · (N₁ − C)) with `C = min(N_ξ, N₁)`.
pub fn single_photon_score_upper(n1: f64, coeffs: &ScoreCoefficients, security: &SecurityParams) -> Result<f64> {
    security.validate()?;
    if !(n1.is_finite() && n1 >= 0.0) {
        return Err(domain("n1", n1, "single-photon round count must be >= 0"));
    }
    let cap = mismatch_round_cap(security.epsilon, security.xi)? as f64;
    Ok(single_photon(n1, coeffs, security.log_inv_eps(), cap))
}

fn single_photon(n1: f64, c: &ScoreCoefficients, l: f64, cap: f64) -> f64 {
    let perfect = cap.min(n1);
    c.gamma_c * perfect + (2.0 * l * (n1 - perfect).max(0.0)).sqrt()
}

/// S₂₊ᵘ = γ_c·N₂₊: every multi-photon round answered correctly.
pub fn multi_photon_score_upper(n2plus: f64, coeffs: &ScoreCoefficients) -> Result<f64> {
    if !(n2plus.is_finite() && n2plus >= 0.0) {
        return Err(domain("n2plus", n2plus, "multi-photon round count must be >= 0"));
    }
    Ok(n2plus * coeffs.gamma_c)
}

/// Mean plus the upper Chernoff offset ½(L + √(L² + 8L·mean)).
fn chernoff_upper(mean: f64, l: f64) -> f64 {
    mean + 0.5 * (l + (l * l + 8.0 * l * mean).sqrt())
}

pub fn photon_class_bounds(rounds: u64, mu: Intensity, eps: f64) -> Result<ClassBounds> {
    if rounds == 0 {
        return Err(domain("rounds", 0.0, "at least one round is required"));
    }
    let l = log_inv(eps)?;
    Ok(class_bounds(rounds, mu, l))
}

fn class_bounds(rounds: u64, mu: Intensity, l: f64) -> ClassBounds {
    let n = rounds as f64;
    let p = poisson_class_probs(mu);
    let n1_upper = chernoff_upper(n * p.p1, l).min(n);
    let n2plus_upper = chernoff_upper(n * p.p2plus, l).min(n);
    ClassBounds {
        n0_lower: (n - n1_upper - n2plus_upper).max(0.0),
        n1_upper,
        n2plus_upper,
    }
}

/// Γ₀ for a session of `rounds` pulses at intensity `mu`.
///
/// `rounds = 0` is accepted and yields the clamped degenerate threshold
/// (all classes empty, only the vacuum fluctuation offset remains).
pub fn threshold(
    rounds: u64,
    mu: Intensity,
    coeffs: &ScoreCoefficients,
    security: &SecurityParams,
) -> Result<ThresholdReport> {
    coeffs.validate()?;
    security.validate()?;
    let l = security.log_inv_eps();
    let bounds = class_bounds(rounds, mu, l);
    let (s0_upper, x_star) = vacuum_max(bounds.n0_lower, coeffs, l);
    let n_xi = mismatch_round_cap(security.epsilon, security.xi)?;
    let s1_upper = single_photon(bounds.n1_upper, coeffs, l, n_xi as f64);
    let s2plus_upper = bounds.n2plus_upper * coeffs.gamma_c;
    Ok(ThresholdReport {
        bounds,
        s0_upper,
        s1_upper,
        s2plus_upper,
        gamma0: s0_upper + s1_upper + s2plus_upper,
        x_star,
        n_xi,
        total_failure_prob: 5.0 * security.epsilon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: ScoreCoefficients = ScoreCoefficients::PUBLISHED;
    const EPS: f64 = 1e-10;

    fn mu(x: f64) -> Intensity {
        Intensity::new(x).unwrap()
    }

    #[test]
    fn vacuum_at_without_fluctuation() {
        // ε → 1 makes L → 0.
        let v = vacuum_score_upper_at(0.0, 100.0, &P, 1.0 - 1e-15).unwrap();
        assert!((v - (-100.0 * P.gamma_perp)).abs() < 1e-6);
    }

    #[test]
    fn vacuum_at_frozen_values() {
        let v = vacuum_score_upper_at(28.0, 1e6, &P, EPS).unwrap();
        assert!((v - -50160.91963935681).abs() < 1e-6);
        let far = vacuum_score_upper_at(1e5, 1e6, &P, EPS).unwrap();
        assert!((far - -91439.15221628785).abs() < 1e-6);
        assert!(v > far);
    }

    #[test]
    fn vacuum_at_rejects_x_outside_range() {
        assert!(vacuum_score_upper_at(-1.0, 10.0, &P, EPS).is_err());
        assert!(vacuum_score_upper_at(11.0, 10.0, &P, EPS).is_err());
        assert!(vacuum_score_upper_at(1.0, 10.0, &P, 0.0).is_err());
    }

    #[test]
    fn vacuum_max_no_rounds() {
        let (s, x) = vacuum_score_upper(0.0, &P, EPS).unwrap();
        assert_eq!(x, 0.0);
        assert!((s - 24.010206057195415).abs() < 1e-9);
        assert!(vacuum_score_upper(-1.0, &P, EPS).is_err());
    }

    #[test]
    fn vacuum_max_interior_point() {
        for n0 in [29.0, 1e3, 1e6] {
            let (s, x) = vacuum_score_upper(n0, &P, EPS).unwrap();
            assert!((x - 28.34).abs() < 0.01, "x* = {x}");
            assert!((s + P.gamma_perp * n0 - 29.08).abs() < 0.01);
        }
        let (s, _) = vacuum_score_upper(5_926_590.0, &P, EPS).unwrap();
        assert!((s - -297_427.0).abs() < 1.0, "{s}");
    }

    #[test]
    fn closed_form_branch_matches_maximum() {
        for n0 in [100.0, 5e4, 5_926_590.0] {
            let (s, _) = vacuum_score_upper(n0, &P, EPS).unwrap();
            let closed = vacuum_score_closed_form(n0, &P, EPS).unwrap().unwrap();
            assert!(((s - closed) / closed).abs() < 1e-9);
        }
        // x* = 28.3 is not interior to [0, 10].
        assert!(vacuum_score_closed_form(10.0, &P, EPS).unwrap().is_none());
    }

    #[test]
    fn mismatch_cap_values() {
        assert_eq!(mismatch_round_cap(1e-10, 0.001).unwrap(), 23015);
        assert_eq!(mismatch_round_cap(0.5, 0.5).unwrap(), 1);
        assert_eq!(mismatch_round_cap(1e-10, 1.0 - 1e-16).unwrap(), 1);
        assert!(mismatch_round_cap(1e-10, 1.0).is_err());
        assert!(mismatch_round_cap(0.0, 0.5).is_err());
    }

    #[test]
    fn single_photon_bound() {
        let sec = SecurityParams::DEFAULT;
        assert_eq!(single_photon_score_upper(0.0, &P, &sec).unwrap(), 0.0);
        assert_eq!(single_photon_score_upper(100.0, &P, &sec).unwrap(), P.gamma_c * 100.0);
        let s1 = single_photon_score_upper(3_103_450.0, &P, &sec).unwrap();
        assert!((s1 - 12_894.0).abs() < 2.0, "{s1}");
        assert!((s1 - 12894.360351540136).abs() < 1e-6);
    }

    #[test]
    fn multi_photon_bound() {
        assert_eq!(multi_photon_score_upper(0.0, &P).unwrap(), 0.0);
        let s = multi_photon_score_upper(969_960.0, &P).unwrap();
        assert!((s - 41_466.0).abs() < 1.0);
        let (a, b) = (1234.0, 98765.0);
        let lhs = multi_photon_score_upper(a, &P).unwrap() + multi_photon_score_upper(b, &P).unwrap();
        assert!((lhs - multi_photon_score_upper(a + b, &P).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn class_bounds_vacuum_source() {
        let b = photon_class_bounds(1000, mu(0.0), EPS).unwrap();
        let l = (1.0 / EPS).ln();
        assert!((b.n1_upper - l).abs() < 1e-9);
        assert!((b.n2plus_upper - l).abs() < 1e-9);
        assert!((b.n0_lower - (1000.0 - 2.0 * l)).abs() < 1e-9);
    }

    #[test]
    fn class_bounds_operating_point() {
        let b = photon_class_bounds(10_000_000, mu(0.52), EPS).unwrap();
        assert!((b.n1_upper - 3_103_450.0).abs() < 5.0);
        assert!((b.n2plus_upper - 969_960.0).abs() < 5.0);
        assert!((b.n0_lower - 5_926_590.0).abs() < 10.0);
        assert!(b.n0_lower + b.n1_upper + b.n2plus_upper >= 1e7 - 1e-6);
    }

    #[test]
    fn class_bounds_without_fluctuation_are_means() {
        let b = photon_class_bounds(1000, mu(0.52), 1.0 - 1e-15).unwrap();
        let p = poisson_class_probs(mu(0.52));
        assert!((b.n1_upper - 1000.0 * p.p1).abs() < 1e-5);
        assert!((b.n2plus_upper - 1000.0 * p.p2plus).abs() < 1e-5);
    }

    #[test]
    fn class_bounds_clamp_small_sessions() {
        let b = photon_class_bounds(10, mu(3.0), EPS).unwrap();
        assert!(b.n1_upper <= 10.0 && b.n2plus_upper <= 10.0);
        assert_eq!(b.n0_lower, 0.0);
        assert!(photon_class_bounds(0, mu(0.5), EPS).is_err());
    }

    #[test]
    fn threshold_at_published_parameters() {
        let r = threshold(10_000_000, mu(0.52), &P, &SecurityParams::DEFAULT).unwrap();
        assert!((r.gamma0 - -243_066.0).abs() < 5.0, "{}", r.gamma0);
        assert!(((r.gamma0 - -242_972.0) / 242_972.0).abs() < 1e-3);
        assert_eq!(r.n_xi, 23015);
        assert_eq!(r.total_failure_prob, 5e-10);
        assert!((r.gamma0 - (r.s0_upper + r.s1_upper + r.s2plus_upper)).abs() <= 1e-9 * r.gamma0.abs());
    }

    #[test]
    fn threshold_vacuum_source() {
        let r = threshold(100_000, mu(0.0), &P, &SecurityParams::DEFAULT).unwrap();
        let l = (1.0 / EPS).ln();
        assert!((r.s2plus_upper - P.gamma_c * l).abs() < 1e-9);
        assert!((r.s1_upper - P.gamma_c * l).abs() < 1e-9);
        assert!(r.s0_upper < -0.9 * P.gamma_perp * r.bounds.n0_lower);
    }

    #[test]
    fn threshold_empty_session() {
        let r = threshold(0, mu(0.52), &P, &SecurityParams::DEFAULT).unwrap();
        assert_eq!(r.bounds.n0_lower, 0.0);
        assert!((r.gamma0 - (P.gamma_c + P.gamma_i) * (1.0 / EPS).ln()).abs() < 1e-9);
    }

    #[test]
    fn threshold_non_increasing_in_epsilon() {
        let g: Vec<f64> = [1e-12, 1e-10, 1e-6, 1e-3]
            .iter()
            .map(|&e| {
                threshold(10_000_000, mu(0.52), &P, &SecurityParams::new(e, 0.001).unwrap())
                    .unwrap()
                    .gamma0
            })
            .collect();
        assert!(g.windows(2).all(|w| w[1] <= w[0]), "{g:?}");
    }

    #[test]
    fn coefficient_magnitude_guard() {
        assert!(ScoreCoefficients::new(0.5, 0.5, 1.5).is_err());
        assert!(ScoreCoefficients::new(0.5, f64::NAN, 1.0).is_err());
    }
}
