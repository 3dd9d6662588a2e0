mod common;

use std::f64::consts::TAU;

use common::{channels, random_cov, random_phases, rng, scenario};
use isasc_core::conic::SolverSettings;
use isasc_core::linalg::{c, quad_form, CMat, C64};
use isasc_core::metrics::{j_value, sinr_scu, sinr_thresholds, PhaseProfile, ThresholdPair};
use isasc_core::optimizer::{
    initial_phases, phase_objective, sca_objective_parts, solve_sp1, solve_sp2, sp2_precompute, tangent_value,
    BeamStructure, DesignContext, LiftedTraces, ScaState,
};
use isasc_core::system::Scenario;
use proptest::prelude::*;
use rand::Rng;

fn mid_thresholds(sc: &Scenario, eps: f64) -> ThresholdPair {
    let (lo, hi) = sc.semantic.rth_interval(eps).unwrap();
    sinr_thresholds(&sc.semantic, 0.5 * (lo + hi), eps).unwrap()
}

/// Random Hermitian PSD matrix with unit diagonal, as a lifted SCA iterate.
fn random_lifted(n: usize, seed: u64) -> CMat {
    let mut r = rng(seed);
    let mut acc = CMat::zeros(n + 1, n + 1);
    for _ in 0..3 {
        let v = PhaseProfile::random(n, &mut r).lifted();
        acc += v * c(r.gen_range(0.1..1.0));
    }
    let d = acc.diagonal().map(|z| 1.0 / z.re.sqrt());
    CMat::from_fn(n + 1, n + 1, |i, j| acc[(i, j)] * c(d[i] * d[j]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn polarization_split_is_exact_at_the_ratios(seed in 0u64..10_000) {
        let sc = scenario(4, 6);
        let ch = channels(&sc, seed);
        let ctx = DesignContext::new(&sc, &ch);
        let cov = random_cov(&mut rng(seed ^ 0xabc), 4, sc.system.k_users, ctx.p_max);
        let pre = sp2_precompute(&ctx, &cov, &ThresholdPair::unconstrained()).unwrap();
        let v = random_lifted(6, seed);
        let u = LiftedTraces::new(&pre, &v).ratios().unwrap();
        let parts = sca_objective_parts(&pre, &v, u).unwrap();
        let sum = parts.j_bar1 + parts.j_bar2;
        prop_assert!((sum - parts.j_tilde).abs() <= 1e-10 * parts.j_tilde.abs().max(1.0));

        // Larger slacks only lower the split value.
        let bigger = [u[0] * 1.5 + 1e-3, u[1] * 1.5 + 1e-3];
        let p2 = sca_objective_parts(&pre, &v, bigger).unwrap();
        prop_assert!(p2.j_bar1 + p2.j_bar2 < sum);
    }

    #[test]
    fn tangent_is_a_global_minorant(seed in 0u64..10_000) {
        let sc = scenario(4, 5);
        let ch = channels(&sc, seed);
        let ctx = DesignContext::new(&sc, &ch);
        let cov = random_cov(&mut rng(seed ^ 0x5ca), 4, sc.system.k_users, ctx.p_max);
        let pre = sp2_precompute(&ctx, &cov, &ThresholdPair::unconstrained()).unwrap();
        let state = ScaState::at(&pre, random_lifted(5, seed), 0).unwrap();
        let at_anchor = tangent_value(&pre, &state, &state.v, state.u);
        let anchor = sca_objective_parts(&pre, &state.v, state.u).unwrap().j_bar1;
        prop_assert!((at_anchor - anchor).abs() <= 1e-12 * anchor.abs().max(1.0));
        let mut r = rng(seed ^ 0x77);
        for i in 0..20 {
            let v = random_lifted(5, seed.wrapping_mul(31).wrapping_add(i));
            let u = [r.gen_range(0.0..3.0) * state.u[0], r.gen_range(0.0..3.0) * state.u[1]];
            let t = tangent_value(&pre, &state, &v, u);
            let f = sca_objective_parts(&pre, &v, u).unwrap().j_bar1;
            prop_assert!(t <= f + 1e-12 * f.abs().max(1.0), "tangent {t} above J̄₁ {f}");
        }
    }
}

#[test]
fn tangent_gradient_matches_finite_differences() {
    let sc = scenario(4, 6);
    for seed in 0..10u64 {
        let ch = channels(&sc, seed);
        let ctx = DesignContext::new(&sc, &ch);
        let cov = random_cov(&mut rng(seed + 100), 4, sc.system.k_users, ctx.p_max);
        let pre = sp2_precompute(&ctx, &cov, &ThresholdPair::unconstrained()).unwrap();
        let state = ScaState::at(&pre, random_lifted(6, seed), 0).unwrap();
        // Hermitian direction in V and a direction in u.
        let mut r = rng(seed + 200);
        let x = CMat::from_fn(7, 7, |_, _| C64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)));
        let dv = (&x + x.adjoint()) * c(0.5);
        let du = [r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)];
        let h = 1e-6;
        let at = |s: f64| {
            let v = &state.v + &dv * c(s);
            let u = [state.u[0] + s * du[0], state.u[1] + s * du[1]];
            (sca_objective_parts(&pre, &v, u).unwrap().j_bar1, tangent_value(&pre, &state, &v, u))
        };
        let (f_p, t_p) = at(h);
        let (f_m, t_m) = at(-h);
        let fd = (f_p - f_m) / (2.0 * h);
        let lin = (t_p - t_m) / (2.0 * h);
        let scale = fd.abs().max(1.0);
        assert!((fd - lin).abs() / scale <= 1e-5, "seed {seed}: fd {fd} vs tangent slope {lin}");
    }
}

#[test]
fn padded_lift_reproduces_j() {
    let sc = scenario(4, 8);
    for seed in 0..20u64 {
        let ch = channels(&sc, seed);
        let ctx = DesignContext::new(&sc, &ch);
        let cov = random_cov(&mut rng(seed + 1), 4, sc.system.k_users, ctx.p_max);
        let pre = sp2_precompute(&ctx, &cov, &ThresholdPair::unconstrained()).unwrap();
        let n = pre.n;
        for m in [&pre.r1_t, &pre.r2_t, &pre.d_t] {
            for i in 0..=n {
                assert_eq!(m[(n, i)], c(0.0));
                assert_eq!(m[(i, n)], c(0.0));
            }
        }
        let v = random_phases(8, seed + 2);
        let (a, b) = LiftedTraces::rank_one(&pre, &v.augmented()).j_tilde().unwrap();
        let lifted = pre.j_scale() * (a + b);
        let direct = j_value(&ch, &v, &cov.r_x).unwrap();
        assert!((lifted - direct).abs() <= 1e-9 * direct, "seed {seed}: {lifted} vs {direct}");
        let dense = LiftedTraces::new(&pre, &v.lifted()).j_tilde().unwrap();
        assert!(((dense.0 + dense.1) - (a + b)).abs() <= 1e-10 * (a + b).abs());
    }
}

#[test]
fn lifted_sinr_constraints_match_direct_sinr() {
    let sc = scenario(4, 8);
    let th = mid_thresholds(&sc, 1e4);
    let ch = channels(&sc, 11);
    let ctx = DesignContext::new(&sc, &ch);
    let cov = random_cov(&mut rng(12), 4, sc.system.k_users, ctx.p_max);
    let pre = sp2_precompute(&ctx, &cov, &th).unwrap();
    assert_eq!(pre.constraints.c_com.len(), sc.system.k_users);
    for i in 0..100u64 {
        let v = random_phases(8, 1000 + i);
        let va = v.augmented();
        for k in 0..sc.system.k_users {
            let h = ch.composite_scu(&v, k).unwrap();
            let signal = (&h * &cov.w_c[k] * h.adjoint())[(0, 0)].re;
            let rest = (&h * (&cov.r_x - &cov.w_c[k]) * h.adjoint())[(0, 0)].re + ctx.noise.scu;
            let margin = quad_form(&pre.constraints.c_com[k], &va).re - pre.constraints.rhs_com[k];
            let expected = signal - th.gamma_com * rest;
            assert!((margin - expected).abs() <= 1e-9 * signal.max(th.gamma_com * rest), "k {k}: {margin} vs {expected}");
            let sinr = sinr_scu(&ch, &v, &cov, k, ctx.noise.scu).unwrap();
            assert_eq!(margin >= 0.0, sinr >= th.gamma_com);
        }
    }
}

#[test]
fn single_element_returns_the_input() {
    let sc = scenario(4, 1);
    let ch = channels(&sc, 5);
    let ctx = DesignContext::new(&sc, &ch);
    let cov = random_cov(&mut rng(6), 4, sc.system.k_users, ctx.p_max);
    let v = PhaseProfile::from_phases(&[0.7]);
    let r = solve_sp2(&ctx, &cov, &ThresholdPair::unconstrained(), &v, &SolverSettings::default(), 0).unwrap();
    assert_eq!(r.v, v);
    assert_eq!(r.sdp_solves, 0);
    assert!(r.kept_initial);
}

#[test]
fn surrogate_value_is_monotone_and_never_below_start() {
    let sc = scenario(4, 8);
    let th = mid_thresholds(&sc, 1e4);
    let settings = SolverSettings::default();
    let mut runs = 0;
    for seed in 0..20u64 {
        let ch = channels(&sc, seed);
        let ctx = DesignContext::new(&sc, &ch);
        let v0 = initial_phases(8, seed);
        let Ok(sp1) = solve_sp1(&ctx, &v0, &th, &BeamStructure::Full, &settings, seed, None) else {
            continue;
        };
        let Ok(r) = solve_sp2(&ctx, &sp1.cov, &th, &v0, &settings, seed) else {
            continue;
        };
        runs += 1;
        for w in r.surrogate_trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-6 * w[0].abs(), "seed {seed}: trace {:?}", r.surrogate_trace);
        }
        let pre = sp2_precompute(&ctx, &sp1.cov, &th).unwrap();
        assert!(r.value >= phase_objective(&pre, &v0) * (1.0 - 1e-12));
        assert!(r.v.max_modulus_error() < 1e-12);
    }
    assert!(runs >= 15, "only {runs} of 20 seeds produced an SP2 run");
}

#[test]
fn three_element_design_is_near_the_grid_optimum() {
    let sc = scenario(4, 3);
    let settings = SolverSettings::default();
    let levels = 16;
    for seed in 0..5u64 {
        let ch = channels(&sc, seed);
        let ctx = DesignContext::new(&sc, &ch);
        let v0 = initial_phases(3, seed);
        let th = ThresholdPair::unconstrained();
        let sp1 = solve_sp1(&ctx, &v0, &th, &BeamStructure::Full, &settings, seed, None).unwrap();
        let pre = sp2_precompute(&ctx, &sp1.cov, &th).unwrap();
        let mut grid_best = f64::NEG_INFINITY;
        for i in 0..levels {
            for j in 0..levels {
                for k in 0..levels {
                    let ph = [i, j, k].map(|t| TAU * t as f64 / levels as f64);
                    grid_best = grid_best.max(phase_objective(&pre, &PhaseProfile::from_phases(&ph)));
                }
            }
        }
        let r = solve_sp2(&ctx, &sp1.cov, &th, &v0, &settings, seed).unwrap();
        assert!(r.value >= 0.95 * grid_best, "seed {seed}: SCA {} vs grid {grid_best}", r.value);
    }
}
