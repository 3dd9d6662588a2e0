use serde::{Deserialize, Serialize};

use super::{solve_sp1, solve_sp2, BeamStructure, DesignContext};
use crate::conic::{SolveStatus, SolverSettings};
use crate::error::{Error, Result};
use crate::linalg::{c, CVec};
use crate::metrics::{j_value, ssr_worst, BeamformerSet, CovarianceSet, PhaseProfile, ThresholdPair};
use crate::par::derive_seed;
use crate::system::{steering_vector, ChannelSet};

/// How the beamformers are parameterized at each AO step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BeamPolicy {
    /// Communication, sensing and AN streams, all free.
    Full,
    /// Communication streams only.
    CommOnly,
    /// Maximum-ratio directions at the current v; powers optimized.
    Mrt,
    /// All-ones directions scaled by 1/M_t; powers optimized.
    Isotropic,
}

impl BeamPolicy {
    pub fn structure(&self, ch: &ChannelSet, v: &PhaseProfile) -> Result<BeamStructure> {
        Ok(match self {
            BeamPolicy::Full => BeamStructure::Full,
            BeamPolicy::CommOnly => BeamStructure::CommOnly,
            BeamPolicy::Mrt => BeamStructure::FixedDirections(mrt_directions(ch, v)?),
            BeamPolicy::Isotropic => {
                let m = ch.m_t();
                let u = CVec::from_element(m, c(1.0 / m as f64));
                BeamStructure::FixedDirections(vec![u; ch.k_users() + 2])
            }
        })
    }
}

fn unit_conj(row: impl Iterator<Item = crate::linalg::C64>, m: usize) -> Result<CVec> {
    let u = CVec::from_iterator(m, row.map(|z| z.conj()));
    let n = u.norm();
    if !(n > 0.0) {
        return Err(Error::Degenerate("zero effective channel, no MRT direction".into()));
    }
    Ok(u.unscale(n))
}

/// MRT directions ĥ†/‖ĥ‖ for every SCU, the target (through the IRS) and
/// the eavesdropper, in stream order [c₁, …, c_K, s, n].
pub fn mrt_directions(ch: &ChannelSet, v: &PhaseProfile) -> Result<Vec<CVec>> {
    let m = ch.m_t();
    let mut dirs = Vec::with_capacity(ch.k_users() + 2);
    for k in 0..ch.k_users() {
        let h = ch.composite_scu(v, k)?;
        dirs.push(unit_conj(h.iter().copied(), m)?);
    }
    let a = steering_vector(ch.scene.theta, ch.n_irs(), ch.spacing_ratio);
    let h_s = a.component_mul(v.v()).transpose() * &ch.g_t;
    dirs.push(unit_conj(h_s.iter().copied(), m)?);
    let h_e = ch.composite_eve(v)?;
    dirs.push(unit_conj(h_e.iter().copied(), m)?);
    Ok(dirs)
}

/// Why the alternating loop stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AoStatus {
    /// Relative CRB change fell below δ_AO.
    Converged,
    /// CRB went up; the best earlier iterate is returned.
    ObjectiveIncreased,
    /// A later sub-problem failed; the best earlier iterate is returned.
    SubproblemFailed,
    MaxIterations,
    /// Beamformers only (phases held fixed), one pass.
    SinglePass,
}

impl AoStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            AoStatus::Converged => "converged",
            AoStatus::ObjectiveIncreased => "objective-increased",
            AoStatus::SubproblemFailed => "subproblem-failed",
            AoStatus::MaxIterations => "max-iterations",
            AoStatus::SinglePass => "single-pass",
        }
    }
}

/// Options of one alternating run.
#[derive(Debug, Clone, PartialEq)]
pub struct AoOptions {
    pub policy: BeamPolicy,
    /// False holds v at v0 and runs the beamforming step once.
    pub optimize_phases: bool,
    /// Beamformers from an earlier run, tried as a candidate in the first step.
    pub warm_beams: Option<BeamformerSet>,
}

impl AoOptions {
    pub fn proposed() -> Self {
        Self { policy: BeamPolicy::Full, optimize_phases: true, warm_beams: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AoResult {
    pub beams: BeamformerSet,
    pub cov: CovarianceSet,
    pub v: PhaseProfile,
    pub j: f64,
    pub crb: f64,
    /// Worst-user semantic secrecy rate, suts/sec.
    pub ssr: f64,
    /// CRB after each (SP1, SP2) pass.
    pub trace: Vec<f64>,
    pub status: AoStatus,
    pub iterations: usize,
    /// Status of the last beamforming SDP.
    pub sdp_status: SolveStatus,
}

struct Iterate {
    beams: BeamformerSet,
    cov: CovarianceSet,
    v: PhaseProfile,
    j: f64,
    crb: f64,
    sdp_status: SolveStatus,
}

/// Alternate beamforming (SP1) and phase (SP2) steps until the relative
/// CRB change drops to δ_AO, the CRB increases, or `max_ao_iters` passes.
pub fn alternating_optimize(
    ctx: &DesignContext,
    thresholds: &ThresholdPair,
    settings: &SolverSettings,
    v0: &PhaseProfile,
    opts: &AoOptions,
) -> Result<AoResult> {
    let ch = ctx.ch;
    let mut v = v0.clone();
    let mut incumbent = opts.warm_beams.clone();
    let mut best: Option<Iterate> = None;
    let mut trace = Vec::new();
    let mut status = AoStatus::MaxIterations;

    for t in 0..settings.max_ao_iters.max(1) {
        let structure = opts.policy.structure(ch, &v)?;
        let seed = derive_seed(settings.seed, 2 * t as u64);
        let sp1 = match solve_sp1(ctx, &v, thresholds, &structure, settings, seed, incumbent.as_ref()) {
            Ok(r) => r,
            Err(e) if best.is_none() => return Err(e),
            Err(e) => {
                log::debug!("AO pass {t}: beamforming step failed: {e}");
                status = AoStatus::SubproblemFailed;
                break;
            }
        };
        let mut it = Iterate {
            j: sp1.j,
            crb: ctx.crb(sp1.j)?,
            beams: sp1.beams,
            cov: sp1.cov,
            v: v.clone(),
            sdp_status: sp1.status,
        };
        if opts.optimize_phases {
            let seed = derive_seed(settings.seed, 2 * t as u64 + 1);
            match solve_sp2(ctx, &it.cov, thresholds, &v, settings, seed) {
                Ok(r) => {
                    let j = j_value(ch, &r.v, &it.cov.r_x)?;
                    if j > it.j {
                        it.j = j;
                        it.crb = ctx.crb(j)?;
                        it.v = r.v;
                    }
                }
                Err(e) => {
                    log::debug!("AO pass {t}: phase step failed: {e}");
                    if best.is_some() {
                        status = AoStatus::SubproblemFailed;
                        trace.push(it.crb);
                        if it.crb < best.as_ref().map_or(f64::INFINITY, |b| b.crb) {
                            best = Some(it);
                        }
                        break;
                    }
                }
            }
        }
        trace.push(it.crb);
        let prev = best.as_ref().map(|b| b.crb);
        if !opts.optimize_phases {
            best = Some(it);
            status = AoStatus::SinglePass;
            break;
        }
        match prev {
            Some(p) if it.crb > p => {
                status = AoStatus::ObjectiveIncreased;
                break;
            }
            Some(p) => {
                let change = (p - it.crb) / p;
                v = it.v.clone();
                incumbent = Some(it.beams.clone());
                best = Some(it);
                if change <= settings.delta_ao {
                    status = AoStatus::Converged;
                    break;
                }
            }
            None => {
                v = it.v.clone();
                incumbent = Some(it.beams.clone());
                best = Some(it);
            }
        }
    }
    let best = best.ok_or_else(|| Error::Infeasible("no feasible alternating-optimization iterate".into()))?;
    let ssr = ssr_worst(ch, &best.v, &best.cov, &ctx.semantic, ctx.noise)?;
    Ok(AoResult {
        iterations: trace.len(),
        beams: best.beams,
        cov: best.cov,
        v: best.v,
        j: best.j,
        crb: best.crb,
        ssr,
        trace,
        status,
        sdp_status: best.sdp_status,
    })
}
