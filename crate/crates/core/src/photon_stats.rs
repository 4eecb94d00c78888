//! Photon-number statistics of phase-randomized weak coherent pulses.
//!
//! A phase-randomized coherent state with mean photon number μ is the Poisson
//! mixture of Fock states, so the optical phase never appears here: a pulse is
//! fully described by its photon count `k ~ Poisson(μ)`. Detection is a
//! threshold (click / no-click) detector behind a channel in which each photon
//! survives independently with probability η, giving `P(click) = 1 − e^{−ημ}`.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{check_closed, domain, Result};

/// Mean photon number μ = |α|² of a pulse.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Intensity(f64);

impl Intensity {
    pub fn new(mu: f64) -> Result<Self> {
        if mu.is_finite() && mu >= 0.0 {
            Ok(Self(mu))
        } else {
            Err(domain("mu", mu, "mean photon number must be finite and >= 0"))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Intensity {
    type Error = crate::QpvError;
    fn try_from(mu: f64) -> Result<Self> {
        Self::new(mu)
    }
}

impl From<Intensity> for f64 {
    fn from(mu: Intensity) -> f64 {
        mu.0
    }
}

/// Probabilities of the vacuum, single-photon and multi-photon classes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassProbs {
    pub p0: f64,
    pub p1: f64,
    pub p2plus: f64,
}

/// Photon-number class of a single pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhotonClass {
    Vacuum,
    Single,
    Multi,
}

impl PhotonClass {
    pub fn of(k: u64) -> Self {
        match k {
            0 => PhotonClass::Vacuum,
            1 => PhotonClass::Single,
            _ => PhotonClass::Multi,
        }
    }
}

/// Lumped channel: per-photon transmittance and misalignment error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    pub eta: f64,
    pub p_e: f64,
}

impl ChannelModel {
    pub fn new(eta: f64, p_e: f64) -> Result<Self> {
        let model = Self { eta, p_e };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        check_closed("eta", self.eta, 0.0, 1.0)?;
        check_closed("p_e", self.p_e, 0.0, 0.5)?;
        Ok(())
    }
}

pub fn poisson_class_probs(mu: Intensity) -> ClassProbs {
    let mu = mu.get();
    let p0 = (-mu).exp();
    let p1 = mu * p0;
    // -expm1 keeps p2plus accurate for small mu where 1 - p0 cancels.
    let p2plus = (-(-mu).exp_m1() - p1).max(0.0);
    ClassProbs { p0, p1, p2plus }
}

/// Exact Poisson sampler for a fixed intensity.
#[derive(Debug, Clone, Copy)]
pub struct PhotonSource {
    dist: Option<Poisson<f64>>,
}

impl PhotonSource {
    pub fn new(mu: Intensity) -> Self {
        // rand_distr rejects λ = 0; Poisson(0) is the point mass at 0.
        let dist = (mu.get() > 0.0).then(|| Poisson::new(mu.get()).expect("finite positive mean"));
        Self { dist }
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match &self.dist {
            Some(d) => d.sample(rng) as u64,
            None => 0,
        }
    }
}

pub fn sample_photon_number<R: Rng + ?Sized>(mu: Intensity, rng: &mut R) -> u64 {
    PhotonSource::new(mu).sample(rng)
}

/// `1 − e^{−ημ}`, the click probability of a threshold detector.
pub fn detection_prob(mu: Intensity, eta: f64) -> Result<f64> {
    check_closed("eta", eta, 0.0, 1.0)?;
    Ok(-(-eta * mu.get()).exp_m1())
}

/// Click with probability `1 − (1−η)^k`: at least one of `k` photons survives.
#[inline]
pub fn sample_threshold_detection<R: Rng + ?Sized>(k: u64, eta: f64, rng: &mut R) -> bool {
    if k == 0 {
        return false;
    }
    let survive_none = (1.0 - eta).powi(k.min(i32::MAX as u64) as i32);
    rng.gen::<f64>() < 1.0 - survive_none
}
