use super::{alternating_optimize, AoOptions, AoResult, DesignContext};
use crate::conic::SolverSettings;
use crate::error::{Error, Result};
use crate::metrics::{sinr_thresholds, PhaseProfile};

/// τ = (√5 − 1)/2.
pub const GOLDEN_RATIO: f64 = 0.618_033_988_749_894_9;

/// Points of the coarse scan used when the search sees a non-unimodal
/// profile or no feasible probe.
pub const FALLBACK_GRID: usize = 9;

/// One evaluated point of a scalar search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probe {
    pub x: f64,
    pub f: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    /// Best evaluated point.
    pub best: Probe,
    /// Every evaluation, in call order.
    pub probes: Vec<Probe>,
    /// Final bracket.
    pub bracket: (f64, f64),
    /// True when the coarse-grid fallback ran.
    pub fallback: bool,
}

/// Golden-section minimization of `f` on [a, b]. Infeasible points should
/// return +∞. Stops once the bracket is at most `rel_tol`·(b − a) wide and
/// evaluates the bracket midpoint. If the probes reveal a second local
/// minimum, or every probe is infeasible, a `FALLBACK_GRID`-point scan over
/// the whole interval picks the cell to refine.
pub fn golden_section<F: FnMut(f64) -> f64>(a: f64, b: f64, rel_tol: f64, mut f: F) -> SearchOutcome {
    let mut probes = Vec::new();
    let mut eval = |x: f64, probes: &mut Vec<Probe>| -> f64 {
        let y = f(x);
        let y = if y.is_nan() { f64::INFINITY } else { y };
        probes.push(Probe { x, f: y });
        y
    };
    let width = b - a;
    let tol = rel_tol * width;

    let (lo, hi, fell_back) = match bracket(a, b, tol, &mut eval, &mut probes) {
        Some((lo, hi)) if !non_unimodal(&probes) => (lo, hi, false),
        found => {
            log::info!(
                "golden-section: {} on [{a:e}, {b:e}], scanning a {FALLBACK_GRID}-point grid",
                if found.is_some() { "non-unimodal profile" } else { "no feasible probe" }
            );
            let step = width / (FALLBACK_GRID + 1) as f64;
            let grid: Vec<Probe> = (1..=FALLBACK_GRID)
                .map(|i| {
                    let x = a + step * i as f64;
                    Probe { x, f: eval(x, &mut probes) }
                })
                .collect();
            let (i, _) = grid
                .iter()
                .enumerate()
                .min_by(|p, q| p.1.f.total_cmp(&q.1.f))
                .expect("non-empty grid");
            let (ga, gb) = (a + step * i as f64, a + step * (i + 2) as f64);
            let (lo, hi) = bracket(ga, gb, tol, &mut eval, &mut probes).unwrap_or((ga, gb));
            (lo, hi, true)
        }
    };
    eval(0.5 * (lo + hi), &mut probes);
    let best = *probes
        .iter()
        .min_by(|p, q| p.f.total_cmp(&q.f))
        .expect("at least one probe");
    SearchOutcome { best, probes, bracket: (lo, hi), fallback: fell_back }
}

/// Plain golden-section contraction. Returns None when every probe is
/// infeasible.
fn bracket(
    mut a: f64,
    mut b: f64,
    tol: f64,
    eval: &mut impl FnMut(f64, &mut Vec<Probe>) -> f64,
    probes: &mut Vec<Probe>,
) -> Option<(f64, f64)> {
    let mut c = b - GOLDEN_RATIO * (b - a);
    let mut d = a + GOLDEN_RATIO * (b - a);
    let mut fc = eval(c, probes);
    let mut fd = eval(d, probes);
    let mut any_finite = fc.is_finite() || fd.is_finite();
    while b - a > tol {
        if fc < fd || (fc == fd && fc.is_finite()) {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN_RATIO * (b - a);
            if b - a <= tol {
                break;
            }
            fc = eval(c, probes);
            any_finite |= fc.is_finite();
        } else if fd < fc {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN_RATIO * (b - a);
            if b - a <= tol {
                break;
            }
            fd = eval(d, probes);
            any_finite |= fd.is_finite();
        } else {
            // Both probes infeasible: nothing to steer by.
            return None;
        }
    }
    any_finite.then_some((a, b))
}

/// True when the finite probes, ordered by x, have an interior local
/// maximum that exceeds both neighbours by more than 1%.
fn non_unimodal(probes: &[Probe]) -> bool {
    let mut pts: Vec<Probe> = probes.iter().copied().filter(|p| p.f.is_finite()).collect();
    pts.sort_by(|p, q| p.x.total_cmp(&q.x));
    pts.windows(3).any(|w| {
        let bump = w[1].f - w[0].f.max(w[2].f);
        bump > 0.01 * w[1].f.abs()
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GssResult {
    pub epsilon: f64,
    pub r_th_opt: f64,
    /// Initial r_th interval, suts/sec.
    pub interval: (f64, f64),
    /// AO outcome at r_th_opt.
    pub ao: AoResult,
    /// Number of AO runs.
    pub evaluations: usize,
    pub feasible_evaluations: usize,
    pub fallback: bool,
}

/// Minimize the CRB over r_th ∈ [rate_scale·A1, rate_scale·A2 − ε]. Each
/// probe runs the alternating optimizer, warm-started from the last
/// feasible probe's (w, v); infeasible probes score +∞.
pub fn golden_section_rth(
    ctx: &DesignContext,
    epsilon: f64,
    settings: &SolverSettings,
    v0: &PhaseProfile,
    opts: &AoOptions,
) -> Result<GssResult> {
    let (lo, hi) = ctx.semantic.rth_interval(epsilon)?;
    let mut warm: Option<AoResult> = None;
    let mut results: Vec<(f64, AoResult)> = Vec::new();
    let mut evaluations = 0;
    let outcome = golden_section(lo, hi, settings.delta_gss, |r_th| {
        evaluations += 1;
        let Ok(th) = sinr_thresholds(&ctx.semantic, r_th, epsilon) else {
            return f64::INFINITY;
        };
        let mut o = opts.clone();
        let start = match &warm {
            Some(w) => {
                o.warm_beams = Some(w.beams.clone());
                w.v.clone()
            }
            None => v0.clone(),
        };
        match alternating_optimize(ctx, &th, settings, &start, &o) {
            Ok(res) => {
                let crb = res.crb;
                warm = Some(res.clone());
                results.push((r_th, res));
                crb
            }
            Err(e) => {
                log::debug!("r_th = {r_th:.3}: {e}");
                f64::INFINITY
            }
        }
    });
    if !outcome.best.f.is_finite() {
        return Err(Error::Infeasible(format!("no feasible r_th for ε = {epsilon} after {evaluations} probes")));
    }
    let feasible_evaluations = results.len();
    let (r_th_opt, ao) = results
        .into_iter()
        .find(|(x, _)| *x == outcome.best.x)
        .expect("best probe was recorded");
    Ok(GssResult {
        epsilon,
        r_th_opt,
        interval: (lo, hi),
        ao,
        evaluations,
        feasible_evaluations,
        fallback: outcome.fallback,
    })
}
