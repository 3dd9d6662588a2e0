use serde::{Deserialize, Serialize};

use super::sinr::{all_sinrs, NoisePowers};
use super::{CovarianceSet, PhaseProfile};
use crate::error::{Error, Result};
use crate::system::ChannelSet;

/// Generalized-logistic semantic similarity E(γ) and the rate scale
/// B·I/(κ·L_s) that turns it into suts/sec.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemanticModel {
    pub a1: f64,
    pub a2: f64,
    pub c1: f64,
    pub c2: f64,
    pub kappa: usize,
    pub l_s: usize,
    pub bandwidth_hz: f64,
    pub i_sem: f64,
}

impl SemanticModel {
    /// Text-transmission fit for κ = 5 with the reference rate parameters.
    pub fn reference() -> Self {
        Self {
            a1: 0.37,
            a2: 0.98,
            c1: 0.25,
            c2: -0.79,
            kappa: 5,
            l_s: 256,
            bandwidth_hz: 5e6,
            i_sem: 10.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.a1 && self.a1 < self.a2 && self.a2 <= 1.0) {
            return Err(Error::Config(format!(
                "logistic asymptotes need 0 < A1 < A2 ≤ 1, got A1 = {}, A2 = {}",
                self.a1, self.a2
            )));
        }
        if !(self.c1 > 0.0) {
            return Err(Error::Config("logistic growth rate C1 must be positive".into()));
        }
        if self.kappa == 0 || self.l_s == 0 || !(self.bandwidth_hz > 0.0) || !(self.i_sem > 0.0) {
            return Err(Error::Config("κ, L_s, B and I must be positive".into()));
        }
        Ok(())
    }

    pub fn with_kappa(mut self, kappa: usize) -> Self {
        self.kappa = kappa;
        self
    }

    /// B·I/(κ·L_s), suts/sec.
    pub fn rate_scale(&self) -> f64 {
        self.bandwidth_hz * self.i_sem / (self.kappa as f64 * self.l_s as f64)
    }

    /// rate_scale·(A2 − A1): no design can exceed this secrecy rate.
    pub fn ssr_ceiling(&self) -> f64 {
        self.rate_scale() * (self.a2 - self.a1)
    }

    /// Admissible r_th range for a given ε: [rate_scale·A1, rate_scale·A2 − ε].
    pub fn rth_interval(&self, epsilon: f64) -> Result<(f64, f64)> {
        let lo = self.rate_scale() * self.a1;
        let hi = self.rate_scale() * self.a2 - epsilon;
        if !(hi > lo) {
            return Err(Error::Infeasible(format!(
                "ε = {epsilon} leaves an empty r_th interval (ceiling {})",
                self.ssr_ceiling()
            )));
        }
        Ok((lo, hi))
    }
}

/// E(γ) with the SINR taken in dB (10·log10 γ). γ ≤ 0 maps to A1.
pub fn semantic_similarity(model: &SemanticModel, gamma: f64) -> f64 {
    if !(gamma > 0.0) {
        return model.a1;
    }
    let x = 10.0 * gamma.log10();
    model.a1 + (model.a2 - model.a1) / (1.0 + (-model.c1 * x - model.c2).exp())
}

/// Semantic rate in suts/sec.
pub fn semantic_rate(model: &SemanticModel, gamma: f64) -> f64 {
    model.rate_scale() * semantic_similarity(model, gamma)
}

/// Linear SINR at which the similarity equals `normalized` ∈ (A1, A2).
pub fn invert_similarity(model: &SemanticModel, normalized: f64) -> Result<f64> {
    if !(normalized > model.a1 && normalized < model.a2) {
        return Err(Error::RateOutOfRange { value: normalized, lower: model.a1, upper: model.a2 });
    }
    let ratio = (model.a2 - normalized) / (normalized - model.a1);
    let exponent = -(model.c2 + ratio.ln()) / (10.0 * model.c1);
    Ok(10f64.powf(exponent))
}

/// SINR thresholds that turn the rate constraints SR_com ≥ r_th + ε and
/// SR_eve ≤ r_th into γ_com ≥ Γ_com and γ_eve ≤ Γ_eve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPair {
    pub gamma_com: f64,
    pub gamma_eve: f64,
    pub r_th: f64,
    pub epsilon: f64,
}

impl ThresholdPair {
    /// Thresholds that make every SINR constraint vacuous.
    pub fn unconstrained() -> Self {
        Self { gamma_com: 0.0, gamma_eve: f64::INFINITY, r_th: f64::NAN, epsilon: 0.0 }
    }
}

pub fn sinr_thresholds(model: &SemanticModel, r_th: f64, epsilon: f64) -> Result<ThresholdPair> {
    let scale = model.rate_scale();
    let gamma_com = invert_similarity(model, (r_th + epsilon) / scale)?;
    let gamma_eve = invert_similarity(model, r_th / scale)?;
    Ok(ThresholdPair { gamma_com, gamma_eve, r_th, epsilon })
}

/// Per-user SSR [SR_com − SR_eve]⁺, then the minimum over users.
pub fn ssr_from_sinrs(model: &SemanticModel, sinrs: &[(f64, f64)]) -> f64 {
    sinrs
        .iter()
        .map(|&(gc, ge)| (semantic_rate(model, gc) - semantic_rate(model, ge)).max(0.0))
        .fold(f64::INFINITY, f64::min)
}

pub fn ssr_worst(
    ch: &ChannelSet,
    v: &PhaseProfile,
    cov: &CovarianceSet,
    model: &SemanticModel,
    noise: NoisePowers,
) -> Result<f64> {
    Ok(ssr_from_sinrs(model, &all_sinrs(ch, v, cov, noise)?))
}
