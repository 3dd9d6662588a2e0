mod common;

use common::{channels, scenario};
use isasc_core::conic::SolverSettings;
use isasc_core::linalg::{c, CMat, CVec, C64};
use isasc_core::metrics::{sinr_thresholds, EchoTraces, PhaseProfile, ThresholdPair};
use isasc_core::optimizer::{initial_phases, solve_sp1, BeamStructure, DesignContext};
use isasc_core::system::cascaded_echo;

/// Orthonormal basis of span{b̄, ḃ̄}; the echo only sees R through Q†RQ.
fn echo_basis(b: &CVec, b_dot: &CVec) -> CMat {
    let q1 = b.conjugate().normalize();
    let mut q2 = b_dot.conjugate();
    let proj = q1.dotc(&q2);
    q2 -= &q1 * proj;
    CMat::from_columns(&[q1, q2.normalize()])
}

/// J at R = Q·(P/2)(I + xσx + yσy + zσz)·Q†.
fn j_bloch(echo: &isasc_core::system::CascadedEcho, q: &CMat, p: f64, x: [f64; 3]) -> f64 {
    let s = CMat::from_row_slice(
        2,
        2,
        &[c(1.0 + x[2]), C64::new(x[0], -x[1]), C64::new(x[0], x[1]), c(1.0 - x[2])],
    ) * c(p / 2.0);
    let r = q * s * q.adjoint();
    EchoTraces::new(echo, &r).j_value().unwrap_or(f64::NEG_INFINITY)
}

fn project_ball(x: [f64; 3]) -> [f64; 3] {
    let n = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    if n > 1.0 {
        [x[0] / n, x[1] / n, x[2] / n]
    } else {
        x
    }
}

/// Max of the concave J over the Bloch ball: grid start, then projected
/// finite-difference ascent with backtracking.
fn brute_force_max(echo: &isasc_core::system::CascadedEcho, q: &CMat, p: f64) -> f64 {
    let f = |x: [f64; 3]| j_bloch(echo, q, p, x);
    let mut best = ([0.0; 3], f([0.0; 3]));
    let g = 20;
    for i in 0..=g {
        for j in 0..=g {
            for k in 0..=g {
                let x = [i, j, k].map(|t| -1.0 + 2.0 * t as f64 / g as f64);
                if x.iter().map(|a| a * a).sum::<f64>() <= 1.0 {
                    let v = f(x);
                    if v > best.1 {
                        best = (x, v);
                    }
                }
            }
        }
    }
    let (mut x, mut fx) = best;
    let mut step = 0.1;
    for _ in 0..5000 {
        let h = 1e-7;
        let grad: [f64; 3] = std::array::from_fn(|d| {
            let mut a = x;
            let mut b = x;
            a[d] += h;
            b[d] -= h;
            (f(a) - f(b)) / (2.0 * h)
        });
        let gn = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gn == 0.0 {
            break;
        }
        let mut moved = false;
        while step > 1e-14 {
            let cand = project_ball(std::array::from_fn(|d| x[d] + step * grad[d] / gn));
            let fc = f(cand);
            if fc > fx {
                x = cand;
                fx = fc;
                moved = true;
                step *= 1.5;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    fx
}

#[test]
fn unconstrained_relaxation_matches_brute_force() {
    let sc = scenario(3, 6);
    for seed in 0..5u64 {
        let ch = channels(&sc, seed);
        let ctx = DesignContext::new(&sc, &ch);
        let v = initial_phases(6, seed);
        let echo = cascaded_echo(&ch, &v).unwrap();
        let q = echo_basis(&echo.b, &echo.b_dot);
        let reference = brute_force_max(&echo, &q, ctx.p_max);
        let settings = SolverSettings::default().with_seed(seed);
        let r = solve_sp1(&ctx, &v, &ThresholdPair::unconstrained(), &BeamStructure::Full, &settings, 1, None).unwrap();
        let rel = (r.relaxed_t - reference).abs() / reference;
        assert!(rel < 1e-6, "seed {seed}: relaxed t {} vs brute force {reference} (rel {rel:e})", r.relaxed_t);
        assert!((r.relaxed_j - reference).abs() / reference < 1e-6);
        // Without SINR constraints a rank-one optimum exists and is recovered.
        assert!(r.j >= 0.95 * r.relaxed_j, "seed {seed}: recovered {} of {}", r.j, r.relaxed_j);
    }
}

fn thresholds_at(sc: &isasc_core::system::Scenario, eps: f64) -> ThresholdPair {
    let (lo, hi) = sc.semantic.rth_interval(eps).unwrap();
    sinr_thresholds(&sc.semantic, 0.5 * (lo + hi), eps).unwrap()
}

#[test]
fn recovered_never_exceeds_relaxed() {
    let sc = scenario(4, 8);
    let th = thresholds_at(&sc, 1e4);
    for seed in 0..5u64 {
        let ch = channels(&sc, seed);
        let ctx = DesignContext::new(&sc, &ch);
        let v = initial_phases(8, seed);
        let r = solve_sp1(&ctx, &v, &th, &BeamStructure::Full, &SolverSettings::default(), seed, None).unwrap();
        assert!(r.j <= r.relaxed_t * (1.0 + 1e-6), "seed {seed}: {} > {}", r.j, r.relaxed_t);
        assert!(r.beams.total_power() <= ctx.p_max * (1.0 + 1e-6));
        assert!(r.feasible || r.j > 0.0);
    }
}

#[test]
fn relaxed_value_non_decreasing_in_power() {
    let sc = scenario(4, 8);
    let th = thresholds_at(&sc, 1e4);
    let settings = SolverSettings::default();
    for seed in 0..3u64 {
        let ch = channels(&sc, seed);
        let v = initial_phases(8, seed);
        let at = |p: f64| {
            let ctx = DesignContext::new(&sc, &ch).with_p_max(p);
            solve_sp1(&ctx, &v, &th, &BeamStructure::Full, &settings, seed, None).unwrap().relaxed_t
        };
        let (one, two) = (at(1.0), at(2.0));
        assert!(two >= one * (1.0 - 1e-7), "seed {seed}: t(2 W) = {two} < t(1 W) = {one}");
        let free = |p: f64| {
            let ctx = DesignContext::new(&sc, &ch).with_p_max(p);
            solve_sp1(&ctx, &v, &ThresholdPair::unconstrained(), &BeamStructure::Full, &settings, seed, None)
                .unwrap()
                .relaxed_t
        };
        // Without constraints J is linear in the power budget.
        assert!((free(2.0) / free(1.0) - 2.0).abs() < 1e-6);
    }
}

#[test]
fn zero_power_is_infeasible_with_positive_target() {
    let sc = scenario(4, 8);
    let ch = channels(&sc, 0);
    let ctx = DesignContext::new(&sc, &ch).with_p_max(0.0);
    let v = PhaseProfile::ones(8);
    let th = thresholds_at(&sc, 1e4);
    assert!(th.gamma_com > 0.0);
    let e = solve_sp1(&ctx, &v, &th, &BeamStructure::Full, &SolverSettings::default(), 0, None).unwrap_err();
    assert!(e.is_infeasible(), "{e}");
    let e = solve_sp1(&ctx, &v, &ThresholdPair::unconstrained(), &BeamStructure::Full, &SolverSettings::default(), 0, None)
        .unwrap_err();
    assert!(!e.is_infeasible());
}

#[test]
fn unreachable_sinr_target_is_infeasible() {
    let sc = scenario(4, 8);
    let ch = channels(&sc, 3);
    let ctx = DesignContext::new(&sc, &ch);
    let th = ThresholdPair { gamma_com: 1e15, gamma_eve: f64::INFINITY, r_th: 0.0, epsilon: 0.0 };
    let e = solve_sp1(&ctx, &PhaseProfile::ones(8), &th, &BeamStructure::Full, &SolverSettings::default(), 0, None)
        .unwrap_err();
    assert!(e.is_infeasible(), "{e}");
}

#[test]
fn comm_only_and_fixed_structures_respect_their_shape() {
    let sc = scenario(4, 8);
    let th = thresholds_at(&sc, 1e4);
    let ch = channels(&sc, 7);
    let ctx = DesignContext::new(&sc, &ch);
    let v = initial_phases(8, 7);
    let settings = SolverSettings::default();
    let r = solve_sp1(&ctx, &v, &th, &BeamStructure::CommOnly, &settings, 0, None).unwrap();
    assert_eq!(r.beams.w_s.norm(), 0.0);
    assert_eq!(r.beams.w_n.norm(), 0.0);
    let full = solve_sp1(&ctx, &v, &th, &BeamStructure::Full, &settings, 0, None).unwrap();
    assert!(full.relaxed_t >= r.relaxed_t * (1.0 - 1e-7));

    // Incumbent beams can only help.
    let again = solve_sp1(&ctx, &v, &th, &BeamStructure::Full, &settings, 99, Some(&full.beams)).unwrap();
    assert!(again.j >= full.j * (1.0 - 1e-9));
}
