//! Honest-prover expectations, intensity optimization and attack-resource accounting.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::exec::{map_units, Execution};
use crate::photon_stats::{detection_prob, ChannelModel, Intensity};
use crate::security_bounds::{threshold, ScoreCoefficients, SecurityParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    /// Total rounds N.
    pub rounds: u64,
    /// Width n of the Boolean-function input, split evenly between verifiers.
    pub input_bits: u32,
    pub mu: Intensity,
    pub channel: ChannelModel,
    pub security: SecurityParams,
    /// Round repetition rate in Hz.
    pub rep_rate: f64,
}

impl ProtocolParams {
    pub fn validate(&self) -> Result<()> {
        if !(2..=64).contains(&self.input_bits) || !self.input_bits.is_multiple_of(2) {
            return Err(domain(
                "input_bits",
                self.input_bits as f64,
                "input width must be even and in [2, 64]",
            ));
        }
        if !(self.rep_rate.is_finite() && self.rep_rate > 0.0) {
            return Err(domain("rep_rate", self.rep_rate, "repetition rate must be > 0"));
        }
        self.channel.validate()?;
        self.security.validate()
    }

    pub fn with_mu(self, mu: Intensity) -> Self {
        Self { mu, ..self }
    }
}

/// Expected event counts of an honest prover; real-valued.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpectedTally {
    pub n_c: f64,
    pub n_i: f64,
    pub n_perp: f64,
}

impl ExpectedTally {
    pub fn total(&self) -> f64 {
        self.n_c + self.n_i + self.n_perp
    }

    pub fn score(&self, c: &ScoreCoefficients) -> f64 {
        c.gamma_c * self.n_c - c.gamma_perp * self.n_perp - c.gamma_i * self.n_i
    }
}

pub fn honest_expected_tally(params: &ProtocolParams) -> Result<ExpectedTally> {
    params.channel.validate()?;
    let n = params.rounds as f64;
    let click = detection_prob(params.mu, params.channel.eta)?;
    let p_e = params.channel.p_e;
    Ok(ExpectedTally {
        n_c: n * click * (1.0 - p_e),
        n_i: n * click * p_e,
        n_perp: n * (1.0 - click),
    })
}

/// Expected honest score N·(γ_c·D(1−p_e) − γ_⊥(1−D) − γ_I·D·p_e), D = 1 − e^{−ημ}.
pub fn honest_expected_score(params: &ProtocolParams, coeffs: &ScoreCoefficients) -> Result<f64> {
    params.channel.validate()?;
    let n = params.rounds as f64;
    let click = detection_prob(params.mu, params.channel.eta)?;
    let no_click = (-params.channel.eta * params.mu.get()).exp();
    let p_e = params.channel.p_e;
    Ok(n * (coeffs.gamma_c * click * (1.0 - p_e) - coeffs.gamma_perp * no_click - coeffs.gamma_i * click * p_e))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub mu_star: f64,
    pub honest_score: f64,
    pub threshold: f64,
    pub margin: f64,
    /// False when no intensity in the interval lets an honest prover clear Γ₀.
    pub feasible: bool,
}

/// Step of the coarse μ grid before golden-section refinement.
pub const GRID_STEP: f64 = 0.01;

fn margin_at(params: &ProtocolParams, coeffs: &ScoreCoefficients, mu: f64) -> Result<(f64, f64)> {
    let p = params.with_mu(Intensity::new(mu)?);
    let honest = honest_expected_score(&p, coeffs)?;
    let gamma0 = threshold(p.rounds, p.mu, coeffs, &p.security)?.gamma0;
    Ok((honest, gamma0))
}

/// Maximizes `honest_expected_score − Γ₀` over μ in `[lo, hi]`.
///
/// The interval is scanned at [`GRID_STEP`] (ties go to the smallest μ), then
/// the best grid cell's neighbourhood is refined by golden-section search
/// until its width drops below `tolerance`.
pub fn optimize_mu(
    fixed: &ProtocolParams,
    coeffs: &ScoreCoefficients,
    interval: (f64, f64),
    tolerance: f64,
    exec: Execution,
) -> Result<PlanResult> {
    let (lo, hi) = interval;
    if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && hi <= 5.0 && lo < hi) {
        return Err(domain("interval", lo, "search interval must satisfy 0 < lo < hi <= 5"));
    }
    if !(tolerance.is_finite() && tolerance > 0.0) {
        return Err(domain("tolerance", tolerance, "tolerance must be > 0"));
    }
    fixed.channel.validate()?;
    fixed.security.validate()?;
    coeffs.validate()?;

    let steps = ((hi - lo) / GRID_STEP).floor() as u64;
    let grid: Vec<f64> = (0..=steps)
        .map(|i| lo + i as f64 * GRID_STEP)
        .chain(((lo + steps as f64 * GRID_STEP) < hi).then_some(hi))
        .collect();
    let objective = |mu: f64| margin_at(fixed, coeffs, mu).map(|(h, t)| h - t);
    let values = map_units(exec, grid.len() as u64, |i| objective(grid[i as usize]));
    let mut best = 0usize;
    let mut best_val = f64::NEG_INFINITY;
    for (i, v) in values.into_iter().enumerate() {
        let v = v?;
        if v > best_val {
            best_val = v;
            best = i;
        }
    }

    let mut a = grid[best.saturating_sub(1)];
    let mut b = grid[(best + 1).min(grid.len() - 1)];
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (objective(c)?, objective(d)?);
    while b - a > tolerance {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = objective(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = objective(d)?;
        }
    }
    let refined = 0.5 * (a + b);
    let mu_star = if objective(refined)? >= best_val {
        refined
    } else {
        grid[best]
    };

    let (honest_score, gamma0) = margin_at(fixed, coeffs, mu_star)?;
    let margin = honest_score - gamma0;
    Ok(PlanResult {
        mu_star,
        honest_score,
        threshold: gamma0,
        margin,
        feasible: margin > 0.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackResource {
    /// Entangled pairs per second an attacker needs: rep_rate·(n/4 − 5).
    pub pairs_per_second: f64,
    /// Set when the input width is below 24 bits.
    pub warning: Option<String>,
}

pub fn attack_resource_rate(input_bits: u32, rep_rate: f64) -> Result<AttackResource> {
    if !(rep_rate.is_finite() && rep_rate > 0.0) {
        return Err(domain("rep_rate", rep_rate, "repetition rate must be > 0"));
    }
    let pairs_per_second = rep_rate * (input_bits as f64 / 4.0 - 5.0);
    let warning = (input_bits < 24).then(|| {
        format!("input width n = {input_bits} < 24: attack resource requirement is not positive")
    });
    Ok(AttackResource {
        pairs_per_second,
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: ScoreCoefficients = ScoreCoefficients::PUBLISHED;

    fn params(rounds: u64, mu: f64, eta: f64, p_e: f64) -> ProtocolParams {
        ProtocolParams {
            rounds,
            input_bits: 40,
            mu: Intensity::new(mu).unwrap(),
            channel: ChannelModel::new(eta, p_e).unwrap(),
            security: SecurityParams::DEFAULT,
            rep_rate: 2e6,
        }
    }

    #[test]
    fn honest_score_values() {
        let s = honest_expected_score(&params(10_000_000, 0.0, 0.7, 0.003), &P).unwrap();
        assert!((s - -1e7 * P.gamma_perp).abs() < 1e-6);
        let s = honest_expected_score(&params(10_000_000, 0.52, 0.7, 0.003), &P).unwrap();
        assert!((s - -227_876.0).abs() < 5.0, "{s}");
        let s = honest_expected_score(&params(1000, 1e3, 1.0, 0.0), &P).unwrap();
        assert!((s - 1000.0 * P.gamma_c).abs() < 1e-9);
    }

    #[test]
    fn honest_tally_values() {
        let t = honest_expected_tally(&params(10_000_000, 0.52, 0.7, 0.003)).unwrap();
        assert!((t.n_c - 3_041_940.0).abs() < 10.0);
        assert!((t.n_i - 9_153.0).abs() < 10.0);
        assert!((t.n_perp - 6_948_910.0).abs() < 10.0);
        let t = honest_expected_tally(&params(1000, 0.52, 0.0, 0.003)).unwrap();
        assert_eq!((t.n_c, t.n_i, t.n_perp), (0.0, 0.0, 1000.0));
    }

    #[test]
    fn tally_closure_and_score_linearity() {
        for (mu, eta, p_e) in [(0.1, 0.3, 0.0), (0.52, 0.7, 0.003), (2.0, 1.0, 0.5), (0.0, 0.5, 0.1)] {
            let p = params(1_000_000, mu, eta, p_e);
            let t = honest_expected_tally(&p).unwrap();
            assert!((t.total() - 1e6).abs() < 1e-6);
            let s = honest_expected_score(&p, &P).unwrap();
            assert!((t.score(&P) - s).abs() <= 1e-6 * s.abs().max(1.0));
        }
    }

    #[test]
    fn optimizer_finds_published_intensity() {
        let r = optimize_mu(&params(10_000_000, 0.5, 0.7, 0.003), &P, (0.05, 2.0), 1e-4, Execution::default())
            .unwrap();
        assert!((r.mu_star - 0.52).abs() < 0.01, "{r:?}");
        assert!(r.feasible);
        assert_eq!(r.margin, r.honest_score - r.threshold);
        let objective = |mu: f64| margin_at(&params(10_000_000, 0.5, 0.7, 0.003), &P, mu).map(|(h, t)| h - t).unwrap();
        assert!(r.margin >= objective(r.mu_star - 0.02));
        assert!(r.margin >= objective(r.mu_star + 0.02));
        assert!((r.margin - 15_190.0).abs() < 300.0);
    }

    #[test]
    fn optimizer_flags_opaque_channel() {
        let r = optimize_mu(&params(10_000_000, 0.5, 0.0, 0.003), &P, (0.05, 2.0), 1e-3, Execution::Sequential)
            .unwrap();
        assert!(!r.feasible);
        assert!(r.margin < 0.0);
    }

    #[test]
    fn optimizer_rejects_bad_interval() {
        let p = params(1000, 0.5, 0.7, 0.003);
        assert!(optimize_mu(&p, &P, (1.0, 0.5), 1e-3, Execution::Sequential).is_err());
        assert!(optimize_mu(&p, &P, (0.0, 0.5), 1e-3, Execution::Sequential).is_err());
        assert!(optimize_mu(&p, &P, (0.1, 6.0), 1e-3, Execution::Sequential).is_err());
        assert!(optimize_mu(&p, &P, (0.1, 0.5), 0.0, Execution::Sequential).is_err());
    }

    #[test]
    fn resource_rate() {
        assert_eq!(attack_resource_rate(40, 2e6).unwrap().pairs_per_second, 1e7);
        let r = attack_resource_rate(24, 2e6).unwrap();
        assert_eq!(r.pairs_per_second, 2e6);
        assert!(r.warning.is_none());
        assert!(attack_resource_rate(20, 2e6).unwrap().warning.is_some());
        assert!(attack_resource_rate(40, 0.0).is_err());
    }

    #[test]
    fn params_validation() {
        let mut p = params(10, 0.5, 0.7, 0.003);
        assert!(p.validate().is_ok());
        p.input_bits = 3;
        assert!(p.validate().is_err());
        p.input_bits = 40;
        p.rep_rate = 0.0;
        assert!(p.validate().is_err());
    }
}
