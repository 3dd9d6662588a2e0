use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::record::{OracleRow, RunOutput, TimingRow};
use super::spec::ExperimentSpec;
use crate::error::Result;
use crate::linalg::{c, cn_matrix, frobenius, rel_err, CMat, CVec, C64};
use crate::metrics::{
    crb_theta_closed, crb_theta_fim, fim_theta, invert_similarity, j_value, semantic_rate, semantic_similarity,
    ssr_worst, CovarianceSet, PhaseProfile, SemanticModel, ThresholdPair,
};
use crate::optimizer::{golden_section, sca_objective_parts, sp2_precompute, tangent_value, DesignContext, LiftedTraces, ScaState};
use crate::par::derive_seed;
use crate::system::{cascaded_echo, lifted_echo, ChannelSet, Scenario};

/// Instances per oracle.
const INSTANCES: usize = 100;

struct Instance {
    scenario: Scenario,
    ch: ChannelSet,
    v: PhaseProfile,
    cov: CovarianceSet,
}

fn random_psd(rng: &mut ChaCha8Rng, m: usize, scale: f64) -> CMat {
    let x = cn_matrix(rng, m, m);
    (&x * x.adjoint()) * c(scale / m as f64)
}

/// M_t = M_r = 4, N = 6 draw with random phases and random covariance blocks.
fn instance(base: &Scenario, seed: u64) -> Result<Instance> {
    let mut scenario = base.clone();
    scenario.system = scenario.system.with_sizes(4, 6);
    let ch = scenario.channels(seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0xca1));
    let v = PhaseProfile::random(6, &mut rng);
    let p = scenario.system.p_max;
    let k = scenario.system.k_users;
    let w_c = (0..k).map(|_| random_psd(&mut rng, 4, p / (k + 2) as f64)).collect();
    let cov = CovarianceSet::from_blocks(w_c, random_psd(&mut rng, 4, p / 4.0), random_psd(&mut rng, 4, p / 4.0))?;
    Ok(Instance { scenario, ch, v, cov })
}

fn oracle(name: &str, observed: f64, tolerance: f64, detail: impl Into<String>) -> OracleRow {
    OracleRow { name: name.into(), observed, tolerance, passed: observed <= tolerance, detail: detail.into() }
}

fn max_over(seed: u64, f: impl Fn(u64) -> Result<f64>) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for i in 0..INSTANCES as u64 {
        let e = f(derive_seed(seed, i))?;
        worst = if e.is_nan() { f64::INFINITY } else { worst.max(e) };
    }
    Ok(worst)
}

fn matrix_rel(a: &CMat, b: &CMat) -> f64 {
    frobenius(&(a - b)) / frobenius(b)
}

/// Execute every identity oracle and report the observed errors.
pub fn run_validation_suite(spec: &ExperimentSpec) -> Result<RunOutput> {
    let base = &spec.scenario;
    let seed = spec.master_seed;
    let mut rows = Vec::new();
    let mut timings = Vec::new();
    let mut step = |name: &str, f: &dyn Fn() -> Result<OracleRow>| -> Result<()> {
        let start = Instant::now();
        let row = f()?;
        timings.push(TimingRow {
            unit: timings.len(),
            label: name.to_string(),
            wall_seconds: start.elapsed().as_secs_f64(),
        });
        log::info!("{}: observed {:.3e} (tol {:.1e}) {}", row.name, row.observed, row.tolerance, if row.passed { "pass" } else { "FAIL" });
        rows.push(row);
        Ok(())
    };

    step("crb_closed_vs_fim", &|| {
        let worst = max_over(seed, |s| {
            let it = instance(base, s)?;
            let l = it.scenario.system.block_length();
            let sigma = it.scenario.system.sigma_s2;
            let closed = crb_theta_closed(&it.ch, &it.v, &it.cov.r_x, l, sigma)?;
            let via_fim = crb_theta_fim(&fim_theta(&it.ch, &it.v, &it.cov.r_x, l, sigma)?)?;
            Ok(rel_err(closed, via_fim))
        })?;
        Ok(oracle("crb_closed_vs_fim", worst, 1e-10, "closed-form CRB vs 3x3 FIM inverse, relative"))
    })?;

    step("echo_derivative_fd", &|| {
        let worst = max_over(seed ^ 1, |s| {
            let mut it = instance(base, s)?;
            let analytic = cascaded_echo(&it.ch, &it.v)?.h_dot;
            let theta = it.ch.scene.theta;
            let h = 1e-6;
            it.ch.scene.theta = theta + h;
            let plus = cascaded_echo(&it.ch, &it.v)?.h;
            it.ch.scene.theta = theta - h;
            let minus = cascaded_echo(&it.ch, &it.v)?.h;
            let fd = (plus - minus) * c(0.5 / h);
            Ok(matrix_rel(&fd, &analytic))
        })?;
        Ok(oracle("echo_derivative_fd", worst, 1e-6, "analytic dH/dθ vs central difference, relative Frobenius"))
    })?;

    step("fim_fd_jacobian", &|| {
        let worst = max_over(seed ^ 2, |s| {
            let it = instance(base, s)?;
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let cols = 16;
            let x = cn_matrix(&mut rng, 4, cols);
            let r = (&x * x.adjoint()) * c(1.0 / cols as f64);
            let sigma = 1e-12;
            let v = &it.v;
            let mean = |ch: &ChannelSet, alpha: C64| -> Result<CVec> {
                let hx = &cascaded_echo(ch, v)?.h * &x;
                Ok(CVec::from_iterator(hx.len(), hx.iter().map(|z| z * alpha)))
            };
            let ch = &it.ch;
            let (theta, alpha) = (ch.scene.theta, ch.scene.alpha);
            let h = 1e-6;
            let mut plus = ch.clone();
            plus.scene.theta = theta + h;
            let mut minus = ch.clone();
            minus.scene.theta = theta - h;
            let d_theta = (mean(&plus, alpha)? - mean(&minus, alpha)?) * c(0.5 / h);
            let ha = alpha.norm() * 1e-3;
            let d_re = (mean(ch, alpha + ha)? - mean(ch, alpha - ha)?) * c(0.5 / ha);
            let d_im = (mean(ch, alpha + C64::new(0.0, ha))? - mean(ch, alpha - C64::new(0.0, ha))?) * c(0.5 / ha);
            let cols_j = [d_theta, d_re, d_im];
            let mut fd = nalgebra::Matrix3::zeros();
            for i in 0..3 {
                for j in 0..3 {
                    fd[(i, j)] = 2.0 / sigma * cols_j[i].dotc(&cols_j[j]).re;
                }
            }
            let f = fim_theta(ch, v, &r, cols, sigma)?.to_matrix();
            Ok((f - fd).norm() / fd.norm())
        })?;
        Ok(oracle("fim_fd_jacobian", worst, 1e-4, "FIM vs finite-difference Jacobian of the echo mean, relative"))
    })?;

    step("crb_power_scaling", &|| {
        let worst = max_over(seed ^ 3, |s| {
            let it = instance(base, s)?;
            let l = it.scenario.system.block_length();
            let sigma = it.scenario.system.sigma_s2;
            let crb = crb_theta_closed(&it.ch, &it.v, &it.cov.r_x, l, sigma)?;
            let mut worst: f64 = 0.0;
            for k in [0.5, 2.0, 10.0] {
                let scaled = crb_theta_closed(&it.ch, &it.v, &(&it.cov.r_x * c(k)), l, sigma)?;
                worst = worst.max(rel_err(scaled, crb / k));
            }
            Ok(worst)
        })?;
        Ok(oracle("crb_power_scaling", worst, 1e-12, "CRB(c·R_x) vs CRB(R_x)/c for c in {0.5, 2, 10}"))
    })?;

    step("logistic_shape", &|| {
        let m = SemanticModel::reference();
        let low = (semantic_similarity(&m, 1e-30) - 0.37).abs();
        let high = (semantic_similarity(&m, 1e30) - 0.98).abs();
        let mid = (semantic_similarity(&m, 10f64.powf(0.316)) - 0.675).abs();
        Ok(oracle("logistic_shape", low.max(high).max(mid), 1e-9, "asymptotes 0.37/0.98, midpoint 0.675 at 3.16 dB"))
    })?;

    step("threshold_roundtrip", &|| {
        let m = SemanticModel::reference();
        let scale = m.rate_scale();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 4));
        let mut worst: f64 = 0.0;
        for _ in 0..INSTANCES {
            let r = scale * rng.gen_range(m.a1 + 1e-3..m.a2 - 1e-3);
            let gamma = invert_similarity(&m, r / scale)?;
            worst = worst.max(rel_err(semantic_rate(&m, gamma), r));
        }
        Ok(oracle("threshold_roundtrip", worst, 1e-6, "rate -> SINR threshold -> rate, relative"))
    })?;

    step("rth_interval", &|| {
        let m = SemanticModel::reference();
        let mut worst: f64 = 0.0;
        for eps in [0.0, 1e4, 2e4] {
            let (lo, hi) = m.rth_interval(eps)?;
            worst = worst.max((lo - 14453.125).abs()).max((hi - (38281.25 - eps)).abs());
        }
        Ok(oracle("rth_interval", worst, 1e-9, "r_th interval bounds vs [14453.125, 38281.25 - ε]"))
    })?;

    step("ssr_ceiling", &|| {
        let mut worst = f64::NEG_INFINITY;
        for i in 0..INSTANCES as u64 {
            let it = instance(base, derive_seed(seed ^ 5, i))?;
            let ssr = ssr_worst(&it.ch, &it.v, &it.cov, &it.scenario.semantic, it.scenario.noise())?;
            worst = worst.max(ssr - it.scenario.semantic.ssr_ceiling());
        }
        Ok(oracle("ssr_ceiling", worst.max(0.0), 0.0, "largest SSR excess over rate_scale·(A2 - A1), suts/sec"))
    })?;

    step("lifted_echo", &|| {
        let worst = max_over(seed ^ 6, |s| {
            let it = instance(base, s)?;
            let e = cascaded_echo(&it.ch, &it.v)?;
            let (h, h_dot) = lifted_echo(&it.ch, &it.v)?;
            Ok(matrix_rel(&h, &e.h).max(matrix_rel(&h_dot, &e.h_dot)))
        })?;
        Ok(oracle("lifted_echo", worst, 1e-10, "vector and lifted forms of H and dH/dθ"))
    })?;

    step("lifted_j", &|| {
        let worst = max_over(seed ^ 7, |s| {
            let it = instance(base, s)?;
            let ctx = DesignContext::new(&it.scenario, &it.ch);
            let pre = sp2_precompute(&ctx, &it.cov, &ThresholdPair::unconstrained())?;
            let (j1, j2) = LiftedTraces::rank_one(&pre, &it.v.augmented()).j_tilde()?;
            Ok(rel_err(pre.j_scale() * (j1 + j2), j_value(&it.ch, &it.v, &it.cov.r_x)?))
        })?;
        Ok(oracle("lifted_j", worst, 1e-9, "J from lifted traces vs direct evaluation"))
    })?;

    step("polarization", &|| {
        let worst = max_over(seed ^ 8, |s| {
            let it = instance(base, s)?;
            let ctx = DesignContext::new(&it.scenario, &it.ch);
            let pre = sp2_precompute(&ctx, &it.cov, &ThresholdPair::unconstrained())?;
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let v = random_psd(&mut rng, pre.n + 1, 1.0);
            let u = LiftedTraces::new(&pre, &v).ratios()?;
            let p = sca_objective_parts(&pre, &v, u)?;
            Ok((p.j_bar1 + p.j_bar2 - p.j_tilde).abs() / p.j_bar1.abs().max(p.j_tilde.abs()))
        })?;
        Ok(oracle("polarization", worst, 1e-10, "J̄₁ + J̄₂ vs J̃₁ + J̃₂ at the Rayleigh slacks, relative"))
    })?;

    step("tangent_minorant", &|| {
        let worst = max_over(seed ^ 9, |s| {
            let it = instance(base, s)?;
            let ctx = DesignContext::new(&it.scenario, &it.ch);
            let pre = sp2_precompute(&ctx, &it.cov, &ThresholdPair::unconstrained())?;
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let state = ScaState::at(&pre, random_psd(&mut rng, pre.n + 1, 1.0), 0)?;
            let v = random_psd(&mut rng, pre.n + 1, 1.0);
            let u = [rng.gen_range(0.0..2.0) * state.u[0], rng.gen_range(0.0..2.0) * state.u[1]];
            let bar = sca_objective_parts(&pre, &v, u)?.j_bar1;
            Ok((tangent_value(&pre, &state, &v, u) - bar).max(0.0) / bar.abs())
        })?;
        Ok(oracle("tangent_minorant", worst, 1e-12, "largest excess of the tangent over J̄₁, relative"))
    })?;

    step("golden_section_stub", &|| {
        let tol = 1e-4;
        let mut worst: f64 = 0.0;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 10));
        for _ in 0..INSTANCES {
            let (a, w) = (rng.gen_range(-5.0..5.0), rng.gen_range(0.5..20.0));
            let x_star = a + w * rng.gen_range(0.05..0.95);
            let out = golden_section(a, a + w, tol, |x| (x - x_star).abs());
            worst = worst.max((out.best.x - x_star).abs() / w);
        }
        Ok(oracle("golden_section_stub", worst, tol, "minimizer error over interval width on |x - x*|"))
    })?;

    Ok(RunOutput { oracles: rows, timings, ..RunOutput::default() })
}
