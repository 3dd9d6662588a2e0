use serde::{Deserialize, Serialize};

use super::{golden_section_rth, AoOptions, AoStatus, DesignContext, GssResult};
use crate::conic::{SolveStatus, SolverSettings};
use crate::metrics::{all_sinrs, PhaseProfile, SemanticModel};

/// Default ε grid: `points` values from 0 to 0.95 of the SSR ceiling.
pub fn default_eps_grid(model: &SemanticModel, points: usize) -> Vec<f64> {
    let top = 0.95 * model.ssr_ceiling();
    match points {
        0 => vec![],
        1 => vec![0.0],
        n => (0..n).map(|i| top * i as f64 / (n - 1) as f64).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    /// SSR floor ε, suts/sec.
    pub epsilon: f64,
    pub r_th_opt: f64,
    /// rad².
    pub crb: f64,
    /// Worst-user SSR of the returned design, suts/sec.
    pub ssr: f64,
    pub feasible: bool,
    pub evaluations: usize,
    /// ε of the run whose design this point reports, when a design found
    /// for a stricter floor beat the point's own search.
    pub design_from_epsilon: Option<f64>,
    pub ao_iterations: usize,
    pub fallback: bool,
    pub ao_status: Option<AoStatus>,
    pub sdp_status: Option<SolveStatus>,
    /// (γ_com, γ_eve) per user for the reported design.
    pub sinrs: Vec<(f64, f64)>,
}

impl ParetoPoint {
    fn infeasible(epsilon: f64, evaluations: usize) -> Self {
        Self {
            epsilon,
            r_th_opt: f64::NAN,
            crb: f64::INFINITY,
            ssr: f64::NAN,
            feasible: false,
            evaluations,
            design_from_epsilon: None,
            ao_iterations: 0,
            fallback: false,
            ao_status: None,
            sdp_status: None,
            sinrs: Vec::new(),
        }
    }

    fn from_gss(ctx: &DesignContext, g: &GssResult) -> Self {
        let sinrs = all_sinrs(ctx.ch, &g.ao.v, &g.ao.cov, ctx.noise).unwrap_or_default();
        Self {
            epsilon: g.epsilon,
            r_th_opt: g.r_th_opt,
            crb: g.ao.crb,
            ssr: g.ao.ssr,
            feasible: true,
            evaluations: g.evaluations,
            design_from_epsilon: None,
            ao_iterations: g.ao.iterations,
            fallback: g.fallback,
            ao_status: Some(g.ao.status),
            sdp_status: Some(g.ao.sdp_status),
            sinrs,
        }
    }
}

/// One golden-section run per ε. Infeasible points are kept and flagged.
///
/// A design that meets SSR ≥ ε₂ also meets every smaller floor, so after
/// the runs each point adopts the best design found at any ε' ≥ ε (the
/// front is then monotone by construction).
pub fn pareto_sweep(
    ctx: &DesignContext,
    eps_grid: &[f64],
    settings: &SolverSettings,
    v0: &PhaseProfile,
    opts: &AoOptions,
) -> Vec<ParetoPoint> {
    let mut points: Vec<ParetoPoint> = eps_grid
        .iter()
        .map(|&eps| match golden_section_rth(ctx, eps, settings, v0, opts) {
            Ok(g) => ParetoPoint::from_gss(ctx, &g),
            Err(e) => {
                log::debug!("ε = {eps}: {e}");
                ParetoPoint::infeasible(eps, 0)
            }
        })
        .collect();
    monotone_pass(&mut points);
    points
}

/// Carry better designs from larger ε down to smaller ε.
pub fn monotone_pass(points: &mut [ParetoPoint]) {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| points[j].epsilon.total_cmp(&points[i].epsilon));
    let mut best: Option<ParetoPoint> = None;
    for i in order {
        let p = &mut points[i];
        if let Some(b) = &best {
            if b.crb < p.crb && b.ssr >= p.epsilon {
                let own_eps = p.epsilon;
                let evaluations = p.evaluations;
                *p = ParetoPoint {
                    epsilon: own_eps,
                    evaluations,
                    design_from_epsilon: Some(b.design_from_epsilon.unwrap_or(b.epsilon)),
                    ..b.clone()
                };
            }
        }
        if p.feasible && best.as_ref().map_or(true, |b| p.crb < b.crb) {
            best = Some(p.clone());
        }
    }
}
