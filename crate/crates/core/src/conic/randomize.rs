use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{min_eigenvalue, principal_component, quad_form, row_quad, CMat, CVec, GaussianSampler};
use crate::metrics::{BeamformerSet, CovarianceSet, NoisePowers, PhaseProfile, ThresholdPair};
use crate::system::ChannelSet;
use crate::tolerances::{POWER_SLACK, PSD_SLACK, SINR_REL};

/// SINR and power constraints on the beamformers for a fixed phase profile.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamConstraintSet {
    /// Composite SCU channels ĥ_Bc,k (1×M_t rows).
    pub scu: Vec<CMat>,
    /// Composite EVE channel ĥ_Be.
    pub eve: CMat,
    pub thresholds: ThresholdPair,
    pub noise: NoisePowers,
    pub p_max: f64,
}

impl BeamConstraintSet {
    pub fn new(ch: &ChannelSet, v: &PhaseProfile, thresholds: ThresholdPair, noise: NoisePowers, p_max: f64) -> Result<Self> {
        let scu = (0..ch.k_users()).map(|k| ch.composite_scu(v, k)).collect::<Result<Vec<_>>>()?;
        Ok(Self { scu, eve: ch.composite_eve(v)?, thresholds, noise, p_max })
    }

    pub fn k_users(&self) -> usize {
        self.scu.len()
    }

    pub fn eve_active(&self) -> bool {
        self.thresholds.gamma_eve.is_finite()
    }
}

/// Signed violations (positive = violated) per constraint family.
#[derive(Debug, Clone, PartialEq)]
pub struct ViolationReport {
    /// tr(R_x) − P_max, watts.
    pub power: f64,
    /// Γ_com − γ_k per SCU.
    pub scu: Vec<f64>,
    /// γ_eve,k − Γ_eve per SCU stream (−∞ when the constraint is inactive).
    pub eve: Vec<f64>,
    /// Largest −λ_min over the covariance blocks, relative to the trace.
    pub psd: f64,
    pub gamma_com: f64,
    pub gamma_eve: f64,
    pub p_max: f64,
}

impl ViolationReport {
    /// Largest violation after normalizing each family by its threshold.
    pub fn max_relative(&self) -> f64 {
        let mut m = self.power / self.p_max.max(f64::MIN_POSITIVE);
        m = m.max(self.psd);
        for &s in &self.scu {
            m = m.max(s / self.gamma_com.max(f64::MIN_POSITIVE));
        }
        if self.gamma_eve.is_finite() {
            for &e in &self.eve {
                m = m.max(e / self.gamma_eve.max(f64::MIN_POSITIVE));
            }
        }
        m
    }

    pub fn is_feasible(&self, sinr_rel: f64) -> bool {
        self.power <= POWER_SLACK * self.p_max.max(1e-300)
            && self.psd <= PSD_SLACK
            && self.scu.iter().all(|&s| s <= sinr_rel * self.gamma_com)
            && (!self.gamma_eve.is_finite() || self.eve.iter().all(|&e| e <= sinr_rel * self.gamma_eve))
    }
}

fn sinr_pair(cons: &BeamConstraintSet, cov: &CovarianceSet, k: usize) -> (f64, f64) {
    let interf = &cov.r_x - &cov.w_c[k];
    let h = &cons.scu[k];
    let gc = row_quad(h, &cov.w_c[k]) / (row_quad(h, &interf) + cons.noise.scu);
    let ge = row_quad(&cons.eve, &cov.w_c[k]) / (row_quad(&cons.eve, &interf) + cons.noise.eve);
    (gc, ge)
}

/// Evaluate every beamformer constraint at `cov`.
pub fn validate_feasibility(cov: &CovarianceSet, cons: &BeamConstraintSet) -> ViolationReport {
    let t = &cons.thresholds;
    let mut scu = Vec::with_capacity(cons.k_users());
    let mut eve = Vec::with_capacity(cons.k_users());
    for k in 0..cons.k_users() {
        let (gc, ge) = sinr_pair(cons, cov, k);
        scu.push(t.gamma_com - gc);
        eve.push(if t.gamma_eve.is_finite() { ge - t.gamma_eve } else { f64::NEG_INFINITY });
    }
    let psd = cov
        .blocks()
        .map(|b| {
            let tr = b.trace().re.abs().max(f64::MIN_POSITIVE);
            -min_eigenvalue(b) / tr
        })
        .fold(f64::NEG_INFINITY, f64::max);
    ViolationReport {
        power: cov.total_power() - cons.p_max,
        scu,
        eve,
        psd: if psd.is_finite() { psd } else { 0.0 },
        gamma_com: t.gamma_com,
        gamma_eve: t.gamma_eve,
        p_max: cons.p_max,
    }
}

/// Unit-modulus and lifted SINR constraints on ṽ for fixed beamformers:
/// ṽ†C_k^com ṽ ≥ rhs_com[k] and ṽ†C_k^eve ṽ ≤ rhs_eve[k].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PhaseConstraintSet {
    pub c_com: Vec<CMat>,
    pub rhs_com: Vec<f64>,
    pub c_eve: Vec<CMat>,
    pub rhs_eve: Vec<f64>,
}

impl PhaseConstraintSet {
    /// Largest relative violation at the augmented vector ṽ.
    pub fn max_violation(&self, v_aug: &CVec) -> f64 {
        let mut m = f64::NEG_INFINITY;
        for (c, &rhs) in self.c_com.iter().zip(&self.rhs_com) {
            let val = quad_form(c, v_aug).re;
            m = m.max((rhs - val) / rhs.abs().max(f64::MIN_POSITIVE));
        }
        for (c, &rhs) in self.c_eve.iter().zip(&self.rhs_eve) {
            let val = quad_form(c, v_aug).re;
            m = m.max((val - rhs) / rhs.abs().max(f64::MIN_POSITIVE));
        }
        m
    }

    pub fn is_empty(&self) -> bool {
        self.c_com.is_empty() && self.c_eve.is_empty()
    }
}

/// Recovered rank-one point together with the randomization statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct GrmOutcome<T> {
    pub value: T,
    pub objective: f64,
    pub relaxed_objective: f64,
    /// objective / relaxed_objective.
    pub ratio: f64,
    pub candidates: usize,
    pub feasible: usize,
}

/// Largest common power scale c for which c·cov meets every constraint,
/// or None. Objectives that are increasing and homogeneous in R_x are
/// maximized by the largest admissible c.
fn best_scale(cov: &CovarianceSet, cons: &BeamConstraintSet) -> Option<f64> {
    let p = cov.total_power();
    if !(p > 0.0) {
        return None;
    }
    let t = &cons.thresholds;
    let mut lower = 0.0f64;
    let mut upper = cons.p_max / p;
    for k in 0..cons.k_users() {
        let interf = &cov.r_x - &cov.w_c[k];
        let a = row_quad(&cons.scu[k], &cov.w_c[k]);
        let b = row_quad(&cons.scu[k], &interf);
        let need = t.gamma_com * cons.noise.scu;
        if need > 0.0 {
            let margin = a - t.gamma_com * b;
            if !(margin > 0.0) {
                return None;
            }
            lower = lower.max(need / margin);
        }
        if t.gamma_eve.is_finite() {
            let ae = row_quad(&cons.eve, &cov.w_c[k]);
            let be = row_quad(&cons.eve, &interf);
            let margin = ae - t.gamma_eve * be;
            if margin > 0.0 {
                upper = upper.min(t.gamma_eve * cons.noise.eve / margin);
            }
        }
    }
    (upper >= lower * (1.0 - SINR_REL)).then_some(upper)
}

/// Gaussian randomization for the beamformer blocks. Candidates are the
/// principal components of each relaxed block plus `trials` draws from
/// CN(0, W) per block. Each candidate is scaled by the largest common
/// factor that keeps it feasible, which is the full power budget unless an
/// eavesdropper constraint binds first. The feasible candidate with the
/// largest objective wins. Trials double up to `doublings` times when
/// nothing feasible turns up.
pub fn randomize_rank_one_w(
    relaxed: &CovarianceSet,
    cons: &BeamConstraintSet,
    objective: &dyn Fn(&CovarianceSet) -> f64,
    relaxed_objective: f64,
    trials: usize,
    doublings: u32,
    seed: u64,
) -> Result<GrmOutcome<BeamformerSet>> {
    let samplers: Vec<GaussianSampler> = relaxed.blocks().map(GaussianSampler::new).collect();
    let k = relaxed.k_users();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, BeamformerSet)> = None;
    let mut best_violation = f64::INFINITY;
    let mut candidates = 0;
    let mut feasible = 0;
    let mut budget = trials;
    let mut round = 0;

    let consider = |bf: BeamformerSet, best: &mut Option<(f64, BeamformerSet)>, best_violation: &mut f64| {
        let cov = bf.covariance();
        match best_scale(&cov, cons) {
            Some(c) => {
                let scaled = bf.scaled(c.sqrt());
                let cov = scaled.covariance();
                let report = validate_feasibility(&cov, cons);
                if !report.is_feasible(SINR_REL) {
                    *best_violation = best_violation.min(report.max_relative());
                    return false;
                }
                let val = objective(&cov);
                if val.is_finite() && best.as_ref().map_or(true, |(b, _)| val > *b) {
                    *best = Some((val, scaled));
                }
                true
            }
            None => {
                let scaled = bf.scaled((cons.p_max / bf.total_power().max(f64::MIN_POSITIVE)).sqrt());
                *best_violation = best_violation.min(validate_feasibility(&scaled.covariance(), cons).max_relative());
                false
            }
        }
    };

    let to_set = |vecs: Vec<CVec>| -> BeamformerSet {
        let mut it = vecs.into_iter();
        let w_c: Vec<CVec> = (0..k).map(|_| it.next().unwrap()).collect();
        BeamformerSet { w_c, w_s: it.next().unwrap(), w_n: it.next().unwrap() }
    };

    let principal = to_set(relaxed.blocks().map(principal_component).collect());
    candidates += 1;
    if consider(principal, &mut best, &mut best_violation) {
        feasible += 1;
    }
    loop {
        for _ in 0..budget {
            let draw = to_set(samplers.iter().map(|s| s.sample(&mut rng)).collect());
            candidates += 1;
            if consider(draw, &mut best, &mut best_violation) {
                feasible += 1;
            }
        }
        if best.is_some() || round >= doublings {
            break;
        }
        round += 1;
        budget *= 2;
    }
    match best {
        Some((objective, value)) => Ok(GrmOutcome {
            value,
            objective,
            relaxed_objective,
            ratio: objective / relaxed_objective,
            candidates,
            feasible,
        }),
        None => Err(Error::Randomization { trials: candidates, best_violation }),
    }
}

/// Gaussian randomization for the lifted phase Gram matrix V. Candidates
/// (the principal eigenvector and draws from CN(0, V)) are projected to
/// unit modulus and rotated so that the last entry of ṽ is 1.
pub fn randomize_rank_one_v(
    gram: &CMat,
    cons: &PhaseConstraintSet,
    objective: &dyn Fn(&PhaseProfile) -> f64,
    relaxed_objective: f64,
    trials: usize,
    doublings: u32,
    seed: u64,
) -> Result<GrmOutcome<PhaseProfile>> {
    let n = gram.nrows() - 1;
    let sampler = GaussianSampler::new(gram);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, PhaseProfile)> = None;
    let mut best_violation = f64::INFINITY;
    let mut candidates = 0;
    let mut feasible = 0;

    let project = |x: &CVec| -> PhaseProfile {
        let anchor = x[n].arg();
        let phases: Vec<f64> = (0..n).map(|i| x[i].arg() - anchor).collect();
        PhaseProfile::from_phases(&phases)
    };
    let consider = |p: PhaseProfile, best: &mut Option<(f64, PhaseProfile)>, best_violation: &mut f64| -> bool {
        let viol = cons.max_violation(&p.augmented());
        if viol > SINR_REL {
            *best_violation = best_violation.min(viol);
            return false;
        }
        let val = objective(&p);
        if val.is_finite() && best.as_ref().map_or(true, |(b, _)| val > *b) {
            *best = Some((val, p));
        }
        true
    };

    candidates += 1;
    if consider(project(&principal_component(gram)), &mut best, &mut best_violation) {
        feasible += 1;
    }
    let mut budget = trials;
    let mut round = 0;
    loop {
        for _ in 0..budget {
            candidates += 1;
            if consider(project(&sampler.sample(&mut rng)), &mut best, &mut best_violation) {
                feasible += 1;
            }
        }
        if best.is_some() || round >= doublings {
            break;
        }
        round += 1;
        budget *= 2;
    }
    match best {
        Some((objective, value)) => Ok(GrmOutcome {
            value: value.with_gram(gram.clone()),
            objective,
            relaxed_objective,
            ratio: objective / relaxed_objective,
            candidates,
            feasible,
        }),
        None => Err(Error::Randomization { trials: candidates, best_violation }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{cn_vector, outer, C64};
    use crate::metrics::{sinr_eve, sinr_scu};
    use crate::system::{synthesize_channels, PathLossModel, SceneLayout, SystemConfig};

    fn instance(seed: u64) -> (ChannelSet, PhaseProfile, SystemConfig) {
        let cfg = SystemConfig::desk_default();
        let layout = SceneLayout::approximate_default(cfg.k_users);
        let ch = synthesize_channels(&cfg, &layout, &PathLossModel::default(), None, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
        let v = PhaseProfile::random(cfg.n_irs, &mut rng);
        (ch, v, cfg)
    }

    fn random_bf(m: usize, k: usize, seed: u64) -> BeamformerSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        BeamformerSet {
            w_c: (0..k).map(|_| cn_vector(&mut rng, m)).collect(),
            w_s: cn_vector(&mut rng, m),
            w_n: cn_vector(&mut rng, m),
        }
    }

    #[test]
    fn report_matches_metrics() {
        let (ch, v, cfg) = instance(4);
        let t = ThresholdPair { gamma_com: 2.0, gamma_eve: 0.5, r_th: 0.0, epsilon: 0.0 };
        let noise = NoisePowers::from_config(&cfg);
        let cons = BeamConstraintSet::new(&ch, &v, t, noise, cfg.p_max).unwrap();
        let bf = random_bf(cfg.m_t, cfg.k_users, 5).scaled(0.1);
        let cov = bf.covariance();
        let rep = validate_feasibility(&cov, &cons);
        for k in 0..cfg.k_users {
            let gc = sinr_scu(&ch, &v, &cov, k, noise.scu).unwrap();
            let ge = sinr_eve(&ch, &v, &cov, k, noise.eve).unwrap();
            assert!((rep.scu[k] - (2.0 - gc)).abs() <= 1e-12 * gc.max(1.0));
            assert!((rep.eve[k] - (ge - 0.5)).abs() <= 1e-12 * ge.max(1.0));
        }
        assert!((rep.power - (cov.total_power() - cfg.p_max)).abs() < 1e-15);
    }

    #[test]
    fn power_violation_reported() {
        let (ch, v, cfg) = instance(1);
        let cons =
            BeamConstraintSet::new(&ch, &v, ThresholdPair::unconstrained(), NoisePowers::from_config(&cfg), 1.0).unwrap();
        let bf = random_bf(cfg.m_t, cfg.k_users, 2);
        let bf = bf.scaled((3.0 / bf.total_power()).sqrt());
        let rep = validate_feasibility(&bf.covariance(), &cons);
        assert!((rep.power - 2.0).abs() < 1e-12);
        assert!(!rep.is_feasible(SINR_REL));
        let ok = bf.scaled((0.5f64 / 3.0).sqrt());
        assert!(validate_feasibility(&ok.covariance(), &cons).is_feasible(SINR_REL));
    }

    #[test]
    fn rank_one_input_is_recovered() {
        let (ch, v, cfg) = instance(6);
        let cons =
            BeamConstraintSet::new(&ch, &v, ThresholdPair::unconstrained(), NoisePowers::from_config(&cfg), cfg.p_max)
                .unwrap();
        let bf = random_bf(cfg.m_t, cfg.k_users, 8);
        let bf = bf.scaled((cfg.p_max / bf.total_power()).sqrt());
        let cov = bf.covariance();
        // Peaks at the input; redistributing power across streams lowers it.
        let obj = |c: &CovarianceSet| 1.0 - (&c.r_x - &cov.r_x).norm() / cov.r_x.norm();
        let relaxed = 1.0;
        let out = randomize_rank_one_w(&cov, &cons, &obj, relaxed, 50, 0, 1).unwrap();
        assert!((out.ratio - 1.0).abs() <= 1e-9, "ratio {}", out.ratio);
        assert!(out.value.total_power() <= cfg.p_max * (1.0 + 1e-9));
    }

    #[test]
    fn phase_rank_one_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let v = PhaseProfile::random(6, &mut rng);
        let gram = outer(&v.augmented());
        let target = v.augmented();
        let obj = |p: &PhaseProfile| p.augmented().dotc(&target).norm();
        let relaxed = obj(&v);
        let out = randomize_rank_one_v(&gram, &PhaseConstraintSet::default(), &obj, relaxed, 20, 0, 3).unwrap();
        assert!((out.ratio - 1.0).abs() <= 1e-9);
        assert!(out.value.max_modulus_error() == 0.0 || out.value.max_modulus_error() < 1e-15);
        let diff = out.value.v() - v.v();
        assert!(diff.norm() < 1e-9);
    }

    #[test]
    fn infeasible_randomization_is_typed() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let v = PhaseProfile::random(3, &mut rng);
        let gram = outer(&v.augmented());
        let cons = PhaseConstraintSet {
            c_com: vec![CMat::identity(4, 4).map(|z| z * C64::new(1.0, 0.0))],
            rhs_com: vec![100.0],
            ..Default::default()
        };
        let err = randomize_rank_one_v(&gram, &cons, &|_| 1.0, 1.0, 5, 1, 0).unwrap_err();
        assert!(matches!(err, Error::Randomization { trials: 16, .. }));
    }
}
