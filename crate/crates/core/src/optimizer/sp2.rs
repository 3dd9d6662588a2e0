use std::f64::consts::TAU;

use super::DesignContext;
use crate::conic::{
    randomize_rank_one_v, solve_sdp, CLinExpr, HermVar, LinExpr, PhaseConstraintSet, SdpProblem, SolveStatus,
    SolverSettings,
};
use crate::error::{Error, Result};
use crate::linalg::{c, hermitian_part, principal_component, quad_form, trace_prod, CMat, CVec, C64};
use crate::metrics::{CovarianceSet, PhaseProfile, ThresholdPair};
use crate::system::{derivative_scale, steering_vector};
use crate::tolerances::SINR_REL;

/// Matrices of the phase-shift sub-problem for fixed beamformers.
///
/// `r1_t`/`r2_t` are the padded R̃₁ and R̃₂ divided by `norm1`/`norm2`, so
/// that J(w, v) = `j_scale()`·(J̃₁ + J̃₂) with the normalized matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Sp2Precomp {
    pub n: usize,
    /// Ã†G_r†G_rÃ (unnormalized, N×N).
    pub r1: CMat,
    /// Ã†G_t* R_x* G_tᵀÃ (unnormalized, N×N).
    pub r2: CMat,
    pub norm1: f64,
    pub norm2: f64,
    pub r1_t: CMat,
    pub r2_t: CMat,
    /// diag(0, 1, …, N−1, 0).
    pub d_t: CMat,
    pub dr1: CMat,
    pub dr2: CMat,
    pub dr1d: CMat,
    pub dr2d: CMat,
    /// (2π d/λ cos θ)².
    pub geometric_scale: f64,
    pub constraints: PhaseConstraintSet,
}

impl Sp2Precomp {
    pub fn j_scale(&self) -> f64 {
        self.geometric_scale * self.norm1 * self.norm2
    }
}

fn pad(m: &CMat) -> CMat {
    let n = m.nrows();
    let mut out = CMat::zeros(n + 1, n + 1);
    out.view_mut((0, 0), (n, n)).copy_from(m);
    out
}

pub fn sp2_precompute(ctx: &DesignContext, cov: &CovarianceSet, thresholds: &ThresholdPair) -> Result<Sp2Precomp> {
    let ch = ctx.ch;
    let n = ch.n_irs();
    let a = steering_vector(ch.scene.theta, n, ch.spacing_ratio);
    let a_diag = CMat::from_diagonal(&a);
    let gr_a = &ch.g_r * &a_diag;
    let r1 = hermitian_part(&(gr_a.adjoint() * &gr_a));
    let gt_a = ch.g_t.transpose() * &a_diag;
    let r2 = hermitian_part(&(gt_a.adjoint() * cov.r_x.conjugate() * &gt_a));
    let norm1 = r1.trace().re;
    let norm2 = r2.trace().re;
    if !(norm1 > 0.0 && norm2 > 0.0) {
        return Err(Error::Degenerate("echo path carries no energy (tr R₁ or tr R₂ is zero)".into()));
    }
    let r1_t = pad(&r1) * c(1.0 / norm1);
    let r2_t = pad(&r2) * c(1.0 / norm2);
    let d_t = CMat::from_fn(n + 1, n + 1, |i, j| if i == j && i < n { c(i as f64) } else { c(0.0) });
    let dr1 = &d_t * &r1_t;
    let dr2 = &d_t * &r2_t;
    let dr1d = &dr1 * &d_t;
    let dr2d = &dr2 * &d_t;

    let mut constraints = PhaseConstraintSet::default();
    let g_com = thresholds.gamma_com;
    let g_eve = thresholds.gamma_eve;
    let g_e = ch.lifted_eve();
    for k in 0..ch.k_users() {
        let mix = |gamma: f64| -> CMat { (&cov.w_c[k] * c(1.0 + gamma) - &cov.r_x * c(gamma)).conjugate() };
        if g_com > 0.0 {
            let g = ch.lifted_scu(k)?;
            constraints.c_com.push(hermitian_part(&(&g * mix(g_com) * g.adjoint())));
            constraints.rhs_com.push(g_com * ctx.noise.scu);
        }
        if g_eve.is_finite() {
            constraints.c_eve.push(hermitian_part(&(&g_e * mix(g_eve) * g_e.adjoint())));
            constraints.rhs_eve.push(g_eve * ctx.noise.eve);
        }
    }
    Ok(Sp2Precomp {
        n,
        r1,
        r2,
        norm1,
        norm2,
        r1_t,
        r2_t,
        d_t,
        dr1,
        dr2,
        dr1d,
        dr2d,
        geometric_scale: derivative_scale(ch),
        constraints,
    })
}

/// Lifted traces at V: a_i = tr(R̃_iV), d_i = tr(D̃R̃_iD̃V), e_i = tr(D̃R̃_iV).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiftedTraces {
    pub a1: f64,
    pub a2: f64,
    pub d1: f64,
    pub d2: f64,
    pub e1: C64,
    pub e2: C64,
}

impl LiftedTraces {
    pub fn new(pre: &Sp2Precomp, v: &CMat) -> Self {
        Self {
            a1: trace_prod(&pre.r1_t, v).re,
            a2: trace_prod(&pre.r2_t, v).re,
            d1: trace_prod(&pre.dr1d, v).re,
            d2: trace_prod(&pre.dr2d, v).re,
            e1: trace_prod(&pre.dr1, v),
            e2: trace_prod(&pre.dr2, v),
        }
    }

    /// Same traces at the rank-one point ṽṽ†.
    pub fn rank_one(pre: &Sp2Precomp, v_aug: &CVec) -> Self {
        Self {
            a1: quad_form(&pre.r1_t, v_aug).re,
            a2: quad_form(&pre.r2_t, v_aug).re,
            d1: quad_form(&pre.dr1d, v_aug).re,
            d2: quad_form(&pre.dr2d, v_aug).re,
            e1: quad_form(&pre.dr1, v_aug),
            e2: quad_form(&pre.dr2, v_aug),
        }
    }

    /// Rayleigh ratios [|e₁|²/a₁, |e₂|²/a₂], the slack values that make
    /// the DC split exact.
    pub fn ratios(&self) -> Result<[f64; 2]> {
        if !(self.a1 > 0.0 && self.a2 > 0.0) {
            return Err(Error::Degenerate(format!("tr(R̃V) vanishes (a₁ = {:e}, a₂ = {:e})", self.a1, self.a2)));
        }
        Ok([self.e1.norm_sqr() / self.a1, self.e2.norm_sqr() / self.a2])
    }

    /// (J̃₁, J̃₂).
    pub fn j_tilde(&self) -> Result<(f64, f64)> {
        let [q1, q2] = self.ratios()?;
        Ok((self.a2 * (self.d1 - q1), self.a1 * (self.d2 - q2)))
    }
}

/// J̄₁ (convex part), J̄₂ (concave part) and J̃₁ + J̃₂ at (V, u).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaParts {
    pub j_bar1: f64,
    pub j_bar2: f64,
    pub j_tilde: f64,
}

fn bar_parts(t: &LiftedTraces, u: [f64; 2]) -> (f64, f64) {
    let sq = |x: f64| 0.25 * x * x;
    let j1 = sq(t.a2 + t.d1) + sq(t.a1 + t.d2) + sq(t.a2 - u[0]) + sq(t.a1 - u[1]);
    let j2 = -sq(t.a2 - t.d1) - sq(t.a1 - t.d2) - sq(t.a2 + u[0]) - sq(t.a1 + u[1]);
    (j1, j2)
}

pub fn sca_objective_parts(pre: &Sp2Precomp, v: &CMat, u: [f64; 2]) -> Result<ScaParts> {
    let t = LiftedTraces::new(pre, v);
    let (j1, j2) = t.j_tilde()?;
    let (j_bar1, j_bar2) = bar_parts(&t, u);
    Ok(ScaParts { j_bar1, j_bar2, j_tilde: j1 + j2 })
}

/// SCA iterate: V⁽ʳ⁾, slacks u⁽ʳ⁾ and J̃ at V⁽ʳ⁾.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaState {
    pub v: CMat,
    pub u: [f64; 2],
    pub value: f64,
    pub iteration: usize,
}

impl ScaState {
    /// State at V with the slacks set to the Rayleigh ratios.
    pub fn at(pre: &Sp2Precomp, v: CMat, iteration: usize) -> Result<Self> {
        let t = LiftedTraces::new(pre, &v);
        let u = t.ratios()?;
        let (j1, j2) = t.j_tilde()?;
        Ok(Self { v, u, value: j1 + j2, iteration })
    }
}

/// Convex surrogate problem built around an SCA state.
#[derive(Debug, Clone)]
pub struct ScaSurrogate {
    pub problem: SdpProblem,
    pub v: HermVar,
    pub u: [LinExpr; 2],
}

/// Value of the tangent Ĵ₁⁽ʳ⁾ at (V, u): the first-order expansion of J̄₁
/// around (V⁽ʳ⁾, u⁽ʳ⁾), including the V-derivative of the slack squares.
pub fn tangent_value(pre: &Sp2Precomp, state: &ScaState, v: &CMat, u: [f64; 2]) -> f64 {
    let r = LiftedTraces::new(pre, &state.v);
    let t = LiftedTraces::new(pre, v);
    let (anchor, _) = bar_parts(&r, state.u);
    let x_r = r.a2 + r.d1;
    let y_r = r.a1 + r.d2;
    anchor
        + 0.5 * x_r * ((t.a2 + t.d1) - x_r)
        + 0.5 * y_r * ((t.a1 + t.d2) - y_r)
        + 0.5 * (r.a2 - state.u[0]) * ((t.a2 - r.a2) - (u[0] - state.u[0]))
        + 0.5 * (r.a1 - state.u[1]) * ((t.a1 - r.a1) - (u[1] - state.u[1]))
}

/// Assemble the convex surrogate: maximize Ĵ₁⁽ʳ⁾ + J̄₂ subject to the slack
/// Schur blocks, the lifted SINR constraints, V ⪰ 0 and unit diagonal.
pub fn sca_linearize(pre: &Sp2Precomp, state: &ScaState) -> ScaSurrogate {
    let mut p = SdpProblem::new();
    let v = p.add_psd(pre.n + 1, "V");
    p.unit_diagonal(&v, "diag");
    let u1 = p.add_scalar();
    let u2 = p.add_scalar();

    let a1 = v.re_trace_with(&pre.r1_t);
    let a2 = v.re_trace_with(&pre.r2_t);
    let d1 = v.re_trace_with(&pre.dr1d);
    let d2 = v.re_trace_with(&pre.dr2d);
    let e1 = v.trace_with(&pre.dr1);
    let e2 = v.trace_with(&pre.dr2);

    for (label, u, e, a) in [("slack1", &u1, &e1, &a1), ("slack2", &u2, &e2, &a2)] {
        p.psd(label, 2, vec![CLinExpr::real(u.clone()), e.clone(), e.conj(), CLinExpr::real(a.clone())]);
    }
    for (k, (cm, rhs)) in pre.constraints.c_com.iter().zip(&pre.constraints.rhs_com).enumerate() {
        p.ge(&format!("com{k}"), v.re_trace_with(cm) - *rhs);
    }
    for (k, (cm, rhs)) in pre.constraints.c_eve.iter().zip(&pre.constraints.rhs_eve).enumerate() {
        p.le(&format!("eve{k}"), v.re_trace_with(cm) - *rhs);
    }

    let r = LiftedTraces::new(pre, &state.v);
    let x_r = r.a2 + r.d1;
    let y_r = r.a1 + r.d2;
    let (anchor, _) = bar_parts(&r, state.u);
    let s1 = r.a2 - state.u[0];
    let s2 = r.a1 - state.u[1];
    let constant = anchor - 0.5 * x_r * x_r - 0.5 * y_r * y_r - 0.5 * s1 * (r.a2 - state.u[0])
        - 0.5 * s2 * (r.a1 - state.u[1]);
    let linear = (a2.clone() + d1.clone()) * (0.5 * x_r)
        + (a1.clone() + d2.clone()) * (0.5 * y_r)
        + (a2.clone() - u1.clone()) * (0.5 * s1)
        + (a1.clone() - u2.clone()) * (0.5 * s2)
        + constant;
    let squares = vec![
        (0.25, a2.clone() - d1),
        (0.25, a1.clone() - d2),
        (0.25, a2 + u1.clone()),
        (0.25, a1 + u2.clone()),
    ];
    p.maximize(linear, squares);
    ScaSurrogate { problem: p, v, u: [u1, u2] }
}

/// Outcome of the phase-shift sub-problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Sp2Result {
    pub v: PhaseProfile,
    /// J̃₁ + J̃₂ (normalized) at each SCA iterate, starting from v_init.
    pub surrogate_trace: Vec<f64>,
    /// J̃ at the final lifted iterate.
    pub relaxed_value: f64,
    /// J̃ at the returned unit-modulus v.
    pub value: f64,
    /// True when randomization produced nothing better than v_init.
    pub kept_initial: bool,
    pub sdp_solves: usize,
}

/// J̃₁ + J̃₂ at a unit-modulus vector (normalized units).
pub fn phase_objective(pre: &Sp2Precomp, v: &PhaseProfile) -> f64 {
    LiftedTraces::rank_one(pre, &v.augmented())
        .j_tilde()
        .map(|(a, b)| a + b)
        .unwrap_or(f64::NEG_INFINITY)
}

/// SCA over the lifted Gram matrix followed by randomization. Returns the
/// best feasible unit-modulus v found, never worse than `v_init`.
pub fn solve_sp2(
    ctx: &DesignContext,
    cov: &CovarianceSet,
    thresholds: &ThresholdPair,
    v_init: &PhaseProfile,
    settings: &SolverSettings,
    seed: u64,
) -> Result<Sp2Result> {
    let pre = sp2_precompute(ctx, cov, thresholds)?;
    let init_value = phase_objective(&pre, v_init);
    if pre.n == 1 {
        // A single element only rotates the echo; nothing to optimize.
        return Ok(Sp2Result {
            v: v_init.clone(),
            surrogate_trace: vec![init_value],
            relaxed_value: init_value,
            value: init_value,
            kept_initial: true,
            sdp_solves: 0,
        });
    }
    let mut state = ScaState::at(&pre, v_init.lifted(), 0)?;
    let mut trace = vec![state.value];
    let mut iterates = Vec::new();
    let mut solves = 0;
    for r in 0..settings.n_sca {
        let sur = sca_linearize(&pre, &state);
        let sol = solve_sdp(&sur.problem, settings)?;
        solves += 1;
        match sol.status {
            SolveStatus::Optimal | SolveStatus::Inaccurate => {}
            SolveStatus::Infeasible if r == 0 => {
                return Err(Error::Infeasible("phase-shift SDP is infeasible".into()));
            }
            s => {
                log::debug!("SCA step {r} stopped with status {s}");
                break;
            }
        }
        let next = match ScaState::at(&pre, hermitian_part(&sol.matrix(&sur.v)), r + 1) {
            Ok(s) => s,
            Err(e) => {
                log::debug!("SCA step {r}: {e}");
                break;
            }
        };
        let gain = (next.value - state.value) / state.value.abs().max(f64::MIN_POSITIVE);
        trace.push(next.value);
        iterates.push(next.v.clone());
        if next.value >= state.value {
            state = next;
        }
        if gain.abs() <= settings.delta_ao * 1e-2 || gain < 0.0 {
            break;
        }
    }

    let objective = |p: &PhaseProfile| phase_objective(&pre, p);
    let path_best = phase_paths(&pre, v_init, &iterates);
    let init_feasible = pre.constraints.max_violation(&v_init.augmented()) <= SINR_REL;
    let (v, value, kept_initial) = match randomize_rank_one_v(
        &state.v,
        &pre.constraints,
        &objective,
        state.value,
        settings.grm_trials,
        settings.grm_doublings,
        seed,
    ) {
        Ok(out) if out.objective > init_value || !init_feasible => (out.value, out.objective, false),
        Ok(_) => (v_init.clone(), init_value, true),
        Err(e) => {
            log::debug!("phase randomization failed ({e}); keeping the initial phases");
            (v_init.clone(), init_value, true)
        }
    };
    let (v, value, kept_initial) = match path_best {
        Some((p, val)) if val > value => (p, val, false),
        _ => (v, value, kept_initial),
    };
    let (v, value, kept_initial) = match coordinate_polish(&pre, &v, value) {
        Some((p, val)) => (p, val, false),
        None => (v, value, kept_initial),
    };
    Ok(Sp2Result { v, surrogate_trace: trace, relaxed_value: state.value, value, kept_initial, sdp_solves: solves })
}

/// Fractions of the phase step tried between v_init and each projected
/// SCA iterate.
const PATH_STEPS: [f64; 5] = [1.0, 0.5, 0.25, 0.125, 0.0625];

/// Best feasible point on the wrapped phase segments from v_init towards
/// the unit-modulus projections of the SCA iterates. Randomization rarely
/// lands inside tight SINR constraints; short steps from the feasible
/// v_init usually do.
fn phase_paths(pre: &Sp2Precomp, v_init: &PhaseProfile, iterates: &[CMat]) -> Option<(PhaseProfile, f64)> {
    let n = pre.n;
    let start: Vec<f64> = v_init.v().iter().map(|z| z.arg()).collect();
    let mut best: Option<(PhaseProfile, f64)> = None;
    for gram in iterates {
        let x = principal_component(gram);
        let anchor = x[n].arg();
        let step: Vec<f64> = (0..n)
            .map(|i| {
                let d = x[i].arg() - anchor - start[i];
                d - TAU * (d / TAU).round()
            })
            .collect();
        for t in PATH_STEPS {
            let phases: Vec<f64> = (0..n).map(|i| start[i] + t * step[i]).collect();
            let p = PhaseProfile::from_phases(&phases);
            if pre.constraints.max_violation(&p.augmented()) > SINR_REL {
                continue;
            }
            let val = phase_objective(pre, &p);
            if best.as_ref().map_or(true, |(_, b)| val > *b) {
                best = Some((p, val));
            }
        }
    }
    best
}

const POLISH_GRID: usize = 64;
const POLISH_SWEEPS: usize = 20;

/// Cyclic element-wise refinement: each phase in turn is searched over a
/// full-circle grid and then by step halving, the others held fixed. Only
/// SINR-feasible moves are taken. Returns None when nothing improved.
fn coordinate_polish(pre: &Sp2Precomp, v: &PhaseProfile, value: f64) -> Option<(PhaseProfile, f64)> {
    if !value.is_finite() || pre.constraints.max_violation(&v.augmented()) > SINR_REL {
        return None;
    }
    let mut phases: Vec<f64> = v.v().iter().map(|z| z.arg()).collect();
    let mut best = value;
    let eval = |ph: &[f64]| -> f64 {
        let p = PhaseProfile::from_phases(ph);
        if pre.constraints.max_violation(&p.augmented()) > SINR_REL {
            return f64::NEG_INFINITY;
        }
        phase_objective(pre, &p)
    };
    for _ in 0..POLISH_SWEEPS {
        let sweep_start = best;
        for i in 0..phases.len() {
            let keep = phases[i];
            let mut arg = keep;
            for g in 1..POLISH_GRID {
                phases[i] = keep + TAU * g as f64 / POLISH_GRID as f64;
                let val = eval(&phases);
                if val > best {
                    best = val;
                    arg = phases[i];
                }
            }
            let mut h = TAU / POLISH_GRID as f64 / 2.0;
            while h > 1e-6 {
                let mut moved = false;
                for d in [h, -h] {
                    phases[i] = arg + d;
                    let val = eval(&phases);
                    if val > best {
                        best = val;
                        arg = phases[i];
                        moved = true;
                    }
                }
                if !moved {
                    h *= 0.5;
                }
            }
            phases[i] = arg;
        }
        if best - sweep_start <= 1e-9 * best.abs() {
            break;
        }
    }
    (best > value).then(|| (PhaseProfile::from_phases(&phases), best))
}
