//! Reference optima of three small SDPs, computed once with an independent
//! interior-point solver (CVXOPT through cvxpy, default tolerances) and
//! frozen here.

use isasc_core::conic::{solve_sdp, HermVar, SdpProblem, SolveStatus, SolverSettings};
use isasc_core::linalg::{c, min_eigenvalue, outer, CMat, CVec, C64};

const N: usize = 6;
const REF_COMPLEX: f64 = 1.8310389793812722;
const REF_REAL: f64 = 2.308513307426858;
const REF_PENALIZED: f64 = 2.865108158968081;

fn complex_cost() -> CMat {
    let a = CMat::from_fn(N, N, |i, j| {
        let (i, j) = (i as f64, j as f64);
        C64::new((1.3 * i + 0.7 * j).cos(), (0.4 * i - 1.1 * j).sin())
    });
    (&a + a.adjoint()) * c(0.5)
}

fn real_cost() -> CMat {
    CMat::from_fn(N, N, |i, j| {
        let (i, j) = (i as f64, j as f64);
        c((0.5 * i * j).cos() + i.sin() * j.sin())
    })
}

fn weights() -> CMat {
    CMat::from_diagonal(&CVec::from_fn(N, |i, _| c((i + 1) as f64 / 6.0)))
}

fn rank_one() -> CMat {
    let u = CVec::from_fn(N, |i, _| C64::from_polar(1.0 / (N as f64).sqrt(), 0.9 * i as f64));
    outer(&u)
}

fn base() -> (SdpProblem, HermVar) {
    let mut p = SdpProblem::new();
    let x = p.add_psd(N, "X");
    p.equal("trace", x.trace() - 1.0);
    (p, x)
}

fn check(value: f64, reference: f64, x: &CMat) {
    assert!((value - reference).abs() <= 1e-6 * reference.abs(), "{value} vs {reference}");
    assert!(min_eigenvalue(x) >= -1e-7);
    assert!((x.trace().re - 1.0).abs() < 1e-7);
}

fn constrained(cost: &CMat, reference: f64) {
    let (mut p, x) = base();
    p.le("weighted", x.re_trace_with(&weights()) - 0.2);
    p.ge("aligned", x.re_trace_with(&rank_one()) - 0.05);
    p.maximize(x.re_trace_with(cost), vec![]);
    let sol = solve_sdp(&p, &SolverSettings::default()).unwrap();
    // The complex instance stops at reduced accuracy after a few steps; the
    // value check below is what matters.
    assert!(sol.status.is_usable(), "{:?}", sol.status);
    assert!(sol.max_violation < 1e-6);
    let xm = sol.matrix(&x);
    check(sol.eval(&x.re_trace_with(cost)), reference, &xm);
    assert!((&weights() * &xm).trace().re <= 0.2 + 1e-7);
    assert!((rank_one() * &xm).trace().re >= 0.05 - 1e-7);
}

#[test]
fn complex_instance_matches_reference() {
    constrained(&complex_cost(), REF_COMPLEX);
}

#[test]
fn real_instance_matches_reference() {
    constrained(&real_cost(), REF_REAL);
}

#[test]
fn penalized_instance_matches_reference() {
    let cost = complex_cost();
    let (mut p, x) = base();
    let dev = x.re_trace_with(&weights()) - 0.3;
    p.maximize(x.re_trace_with(&cost), vec![(0.5, dev.clone())]);
    let sol = solve_sdp(&p, &SolverSettings::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    let d = sol.eval(&dev);
    let value = sol.eval(&x.re_trace_with(&cost)) - 0.5 * d * d;
    check(value, REF_PENALIZED, &sol.matrix(&x));
}

#[test]
fn embedding_choice_does_not_change_the_optimum() {
    let cost = real_cost();
    let (mut p, x) = base();
    p.le("weighted", x.re_trace_with(&weights()) - 0.2);
    p.maximize(x.re_trace_with(&cost), vec![]);
    let plain = solve_sdp(&p, &SolverSettings::default()).unwrap();
    let forced = solve_sdp(&p, &SolverSettings { force_complex_embedding: true, ..SolverSettings::default() }).unwrap();
    let a = plain.eval(&x.re_trace_with(&cost));
    let b = forced.eval(&x.re_trace_with(&cost));
    assert!((a - b).abs() <= 1e-7 * a.abs());
}
