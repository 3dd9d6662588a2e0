use super::DesignContext;
use crate::conic::{
    randomize_rank_one_w, solve_sdp, validate_feasibility, BeamConstraintSet, CLinExpr, HermVar, LinExpr, SdpProblem,
    SolveStatus, SolverSettings,
};
use crate::error::{Error, Result};
use crate::linalg::{c, hermitian_eigen, outer, principal_component, CMat, CVec, C64};
use crate::metrics::{BeamformerSet, CovarianceSet, EchoTraces, PhaseProfile, ThresholdPair};
use crate::system::cascaded_echo;
use crate::tolerances::SINR_REL;

const BOUND_TOL: f64 = 1e-10;

/// Admissible beamformer structure.
#[derive(Debug, Clone, PartialEq)]
pub enum BeamStructure {
    /// Communication, sensing and artificial-noise streams, all free.
    Full,
    /// Communication streams only (W_s = W_n = 0).
    CommOnly,
    /// Fixed directions [u_c,1, …, u_c,K, u_s, u_n]; only the powers
    /// p_i = |α_i|² are optimized, with Σ p_i ≤ P_max.
    FixedDirections(Vec<CVec>),
}

/// Outcome of the beamforming sub-problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Sp1Result {
    pub beams: BeamformerSet,
    pub cov: CovarianceSet,
    /// J at the recovered rank-one beamformers.
    pub j: f64,
    /// J at the relaxed optimum.
    pub relaxed_j: f64,
    /// Optimal value of the relaxed SDP, t.
    pub relaxed_t: f64,
    pub relaxed_cov: CovarianceSet,
    pub status: SolveStatus,
    /// Recovered point passed `validate_feasibility`.
    pub feasible: bool,
}

impl Sp1Result {
    pub fn recovery_ratio(&self) -> f64 {
        self.j / self.relaxed_j
    }
}

enum Block {
    Herm(HermVar),
    Powered(LinExpr, CVec),
    Zero,
}

impl Block {
    /// tr(C·Ŵ) for the normalized block Ŵ = W / P_max.
    fn trace_with(&self, cm: &CMat) -> CLinExpr {
        match self {
            Block::Herm(h) => h.trace_with(cm),
            Block::Powered(p, u) => {
                let g: C64 = (u.adjoint() * cm * u)[(0, 0)];
                CLinExpr::real(p.clone()).scale(g)
            }
            Block::Zero => CLinExpr::zero(),
        }
    }

    fn value(&self, x: &[f64], m: usize, p_max: f64) -> CMat {
        match self {
            Block::Herm(h) => h.value(x) * c(p_max),
            Block::Powered(p, u) => outer(u) * c(p_max * p.eval(x).max(0.0)),
            Block::Zero => CMat::zeros(m, m),
        }
    }
}

fn row_gram(h: &CMat) -> CMat {
    h.adjoint() * h
}

fn sum_exprs(blocks: &[Block], cm: &CMat) -> CLinExpr {
    blocks.iter().fold(CLinExpr::zero(), |acc, b| acc + b.trace_with(cm))
}

/// Relaxed beamforming SDP followed by Gaussian-randomization recovery.
///
/// Maximizes t subject to the 2×2 Schur block
/// [[tr(ḢRḢ†) − t, tr(HRḢ†)], [tr(ḢRH†), tr(HRH†)]] ⪰ 0, the per-user
/// SCU/EVE SINR constraints, PSD blocks and tr(R_x) ≤ P_max. `incumbent`
/// beamformers (if feasible at this v) join the candidate pool.
pub fn solve_sp1(
    ctx: &DesignContext,
    v: &PhaseProfile,
    thresholds: &ThresholdPair,
    structure: &BeamStructure,
    settings: &SolverSettings,
    seed: u64,
    incumbent: Option<&BeamformerSet>,
) -> Result<Sp1Result> {
    let ch = ctx.ch;
    let m = ch.m_t();
    let k_users = ch.k_users();
    let p_max = ctx.p_max;
    if !(p_max > 0.0) {
        if thresholds.gamma_com > 0.0 {
            return Err(Error::Infeasible("no transmit power but a positive SINR target".into()));
        }
        return Err(Error::NonIdentifiable("no transmit power, the target is not illuminated".into()));
    }
    let echo = cascaded_echo(ch, v)?;
    let cons = BeamConstraintSet::new(ch, v, *thresholds, ctx.noise, p_max)?;
    // No interference and the whole budget on user k bounds its SINR.
    if thresholds.gamma_com > 0.0 {
        for (k, h) in cons.scu.iter().enumerate() {
            let best = p_max * h.norm_squared() / ctx.noise.scu;
            if thresholds.gamma_com > best {
                return Err(Error::Infeasible(format!(
                    "SINR target {:e} exceeds the interference-free bound {best:e} of user {k}",
                    thresholds.gamma_com
                )));
            }
        }
    }

    let mut p = SdpProblem::new();
    let mut blocks = Vec::with_capacity(k_users + 2);
    let mut power = LinExpr::zero();
    match structure {
        BeamStructure::Full | BeamStructure::CommOnly => {
            let streams = if *structure == BeamStructure::Full { k_users + 2 } else { k_users };
            for i in 0..streams {
                let h = p.add_psd(m, &format!("W{i}"));
                power += h.trace();
                blocks.push(Block::Herm(h));
            }
            while blocks.len() < k_users + 2 {
                blocks.push(Block::Zero);
            }
        }
        BeamStructure::FixedDirections(dirs) => {
            if dirs.len() != k_users + 2 || dirs.iter().any(|u| u.len() != m) {
                return Err(Error::Dimension(format!("expected {} directions of length {m}", k_users + 2)));
            }
            for (i, u) in dirs.iter().enumerate() {
                let pw = p.add_scalar();
                p.ge(&format!("p{i}>=0"), pw.clone());
                power += pw.clone();
                blocks.push(Block::Powered(pw, u.clone()));
            }
        }
    }
    p.le("power", power - 1.0);

    // Schur block, normalized so that its entries are O(1).
    let hh = row_gram(&echo.h);
    let hdhd = row_gram(&echo.h_dot);
    let cross = echo.h_dot.adjoint() * &echo.h;
    let norm = hh.norm().max(hdhd.norm()).max(f64::MIN_POSITIVE);
    let s1 = 1.0 / norm;
    let s2 = s1;
    let t = p.add_scalar();
    let a = sum_exprs(&blocks, &(&hdhd * c(s1)));
    let b = sum_exprs(&blocks, &(&cross * c((s1 * s2).sqrt())));
    let d = sum_exprs(&blocks, &(&hh * c(s2)));
    p.psd(
        "schur",
        2,
        vec![CLinExpr { re: a.re - t.clone(), im: LinExpr::zero() }, b.clone(), b.conj(), d],
    );

    // SINR constraints in the form ĥ W_c ĥ† − Γ ĥ(R − W_c)ĥ† ≥ Γσ² (and ≤ for EVE).
    let t_com = thresholds.gamma_com;
    let t_eve = thresholds.gamma_eve;
    for k in 0..k_users {
        let signal_and_rest = |g: &CMat, gamma: f64| -> LinExpr {
            let r = sum_exprs(&blocks, g).re;
            let w = blocks[k].trace_with(g).re;
            (w * (1.0 + gamma) - r * gamma) * p_max
        };
        // Rows are divided by Γσ² so the constant term is 1.
        if t_com > 0.0 {
            let g = row_gram(&cons.scu[k]) * c(1.0 / (t_com * ctx.noise.scu));
            p.ge(&format!("scu{k}"), signal_and_rest(&g, t_com) - 1.0);
        }
        if t_eve.is_finite() && t_eve > 0.0 {
            let g = row_gram(&cons.eve) * c(1.0 / (t_eve * ctx.noise.eve));
            p.le(&format!("eve{k}"), signal_and_rest(&g, t_eve) - 1.0);
        } else if t_eve == 0.0 {
            let g = row_gram(&cons.eve);
            p.le(&format!("eve{k}"), signal_and_rest(&g, t_eve));
        }
    }
    p.maximize(t.clone(), vec![]);

    // relaxed_t is reported as an upper bound on every recovered J, so the
    // free-beam SDP is solved to a tighter gap than the default.
    let tight;
    let sdp_settings = if matches!(structure, BeamStructure::FixedDirections(_)) {
        settings
    } else {
        tight = SolverSettings {
            feas_tol: settings.feas_tol.min(BOUND_TOL),
            gap_tol: settings.gap_tol.min(BOUND_TOL),
            ..settings.clone()
        };
        &tight
    };
    let sol = solve_sdp(&p, sdp_settings)?;
    match sol.status {
        SolveStatus::Optimal | SolveStatus::Inaccurate => {}
        SolveStatus::Infeasible => return Err(Error::Infeasible("beamforming SDP is infeasible".into())),
        s => return Err(Error::Solver { status: s, detail: "beamforming SDP".into() }),
    }
    if sol.status == SolveStatus::Inaccurate {
        log::debug!("beamforming SDP solved to reduced accuracy (violation {:e})", sol.max_violation);
    }
    let mats: Vec<CMat> = blocks.iter().map(|b| b.value(&sol.x, m, p_max)).collect();
    let relaxed_cov = CovarianceSet::from_blocks(mats[..k_users].to_vec(), mats[k_users].clone(), mats[k_users + 1].clone())?;
    let relaxed_t = sol.eval(&t) * p_max / s1;
    let j_of = |cov: &CovarianceSet| EchoTraces::new(&echo, &cov.r_x).j_value().unwrap_or(f64::NEG_INFINITY);
    let relaxed_j = j_of(&relaxed_cov);

    let mut feasible = true;
    let (beams, cov, j) = match structure {
        BeamStructure::FixedDirections(dirs) => {
            let beams = powered_beams(dirs, &blocks, &sol.x, p_max, k_users);
            let cov = beams.covariance();
            let report = validate_feasibility(&cov, &cons);
            if !report.is_feasible(SINR_REL.max(settings.feasibility_check_tol)) {
                log::debug!("fixed-direction solution violates constraints by {:e}", report.max_relative());
                feasible = false;
            }
            let j = j_of(&cov);
            (beams, cov, j)
        }
        _ => {
            let grm = randomize_rank_one_w(
                &relaxed_cov,
                &cons,
                &j_of,
                relaxed_j,
                settings.grm_trials,
                settings.grm_doublings,
                seed,
            );
            let comm_only = *structure == BeamStructure::CommOnly;
            let mut pool: Vec<(BeamformerSet, f64)> = Vec::new();
            let grm_err = match grm {
                Ok(out) => {
                    let dirs = directions_of(&out.value, comm_only);
                    pool.push((out.value, out.objective));
                    if let Some(cand) = repowered(ctx, v, thresholds, dirs, settings, seed) {
                        pool.push(cand);
                    }
                    None
                }
                Err(e) => {
                    let principal = relaxed_cov.blocks().map(principal_component).collect::<Vec<_>>();
                    let dirs = if comm_only { zero_extras(principal, k_users) } else { principal };
                    if let Some(cand) = repowered(ctx, v, thresholds, dirs, settings, seed) {
                        pool.push(cand);
                    }
                    Some(e)
                }
            };
            let dirs = structured_directions(&relaxed_cov, &cons, comm_only);
            if let Some(cand) = repowered(ctx, v, thresholds, dirs, settings, seed) {
                pool.push(cand);
            }
            if let Some(inc) = incumbent {
                let cov = inc.covariance();
                if validate_feasibility(&cov, &cons).is_feasible(SINR_REL) {
                    pool.push((inc.clone(), j_of(&cov)));
                }
            }
            let Some((beams, j)) = pool.into_iter().max_by(|a, b| a.1.total_cmp(&b.1)) else {
                return Err(grm_err.expect("empty pool only after a randomization failure"));
            };
            if let Some(e) = grm_err {
                log::debug!("beam randomization failed ({e}); using a re-powered candidate");
            }
            let cov = beams.covariance();
            (beams, cov, j)
        }
    };
    if !(j > 0.0) {
        return Err(Error::NonIdentifiable("recovered beamformers do not illuminate the target".into()));
    }
    Ok(Sp1Result { beams, cov, j, relaxed_j, relaxed_t, relaxed_cov, status: sol.status, feasible })
}

fn powered_beams(dirs: &[CVec], blocks: &[Block], x: &[f64], p_max: f64, k_users: usize) -> BeamformerSet {
    let amp: Vec<CVec> = dirs
        .iter()
        .zip(blocks)
        .map(|(u, b)| match b {
            Block::Powered(pw, _) => u * c((p_max * pw.eval(x).max(0.0)).sqrt()),
            _ => CVec::zeros(u.len()),
        })
        .collect();
    BeamformerSet { w_c: amp[..k_users].to_vec(), w_s: amp[k_users].clone(), w_n: amp[k_users + 1].clone() }
}

fn unit_or_axis(x: CVec) -> CVec {
    let n = x.norm();
    if n > 0.0 {
        x.unscale(n)
    } else {
        let mut e = CVec::zeros(x.len());
        e[0] = c(1.0);
        e
    }
}

fn zero_extras(mut dirs: Vec<CVec>, k_users: usize) -> Vec<CVec> {
    for d in dirs.iter_mut().skip(k_users) {
        d.fill(c(0.0));
    }
    dirs
}

fn directions_of(beams: &BeamformerSet, comm_only: bool) -> Vec<CVec> {
    let m = beams.w_s.len();
    let mut dirs: Vec<CVec> = beams.w_c.iter().cloned().map(unit_or_axis).collect();
    if comm_only {
        dirs.extend([CVec::zeros(m), CVec::zeros(m)]);
    } else {
        dirs.push(unit_or_axis(beams.w_s.clone()));
        dirs.push(unit_or_axis(beams.w_n.clone()));
    }
    dirs
}

/// Rank-one directions that keep each user's relaxed signal power:
/// w̃_k ∝ W_k ĥ_k†, with the sensing and AN streams along the two leading
/// eigenvectors of what is left of R_x.
fn structured_directions(relaxed: &CovarianceSet, cons: &BeamConstraintSet, comm_only: bool) -> Vec<CVec> {
    let m = relaxed.r_x.nrows();
    let mut residual = relaxed.r_x.clone();
    let mut dirs = Vec::with_capacity(relaxed.k_users() + 2);
    for (k, w) in relaxed.w_c.iter().enumerate() {
        let h = cons.scu[k].adjoint();
        let g = (w * &h).column(0).into_owned();
        let s = (h.adjoint() * &g)[(0, 0)].re;
        let u = if s > 0.0 { g.unscale(s.sqrt()) } else { principal_component(w) };
        residual -= outer(&u);
        dirs.push(unit_or_axis(u));
    }
    if comm_only {
        dirs.extend([CVec::zeros(m), CVec::zeros(m)]);
    } else {
        let (_, vecs) = hermitian_eigen(&residual);
        dirs.push(vecs.column(0).into_owned());
        dirs.push(vecs.column(1.min(m - 1)).into_owned());
    }
    dirs
}

/// Re-optimize stream powers along fixed directions; None if that SDP
/// fails or the result is not feasible.
fn repowered(
    ctx: &DesignContext,
    v: &PhaseProfile,
    thresholds: &ThresholdPair,
    dirs: Vec<CVec>,
    settings: &SolverSettings,
    seed: u64,
) -> Option<(BeamformerSet, f64)> {
    match solve_sp1(ctx, v, thresholds, &BeamStructure::FixedDirections(dirs), settings, seed, None) {
        Ok(r) if r.feasible => Some((r.beams, r.j)),
        Ok(_) => None,
        Err(e) => {
            log::debug!("power re-optimization: {e}");
            None
        }
    }
}
