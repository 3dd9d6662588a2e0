use std::sync::Once;

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, NonnegativeConeT, PSDTriangleConeT, SolverStatus, SupportedConeT,
    ZeroConeT,
};

use super::problem::{CLinExpr, Constraint, LinExpr, Relation, SdpProblem, SdpSolution};
use super::{SolveStatus, SolverSettings};
use crate::error::{Error, Result};

extern "C" {
    fn openblas_set_num_threads(n: std::os::raw::c_int);
}

static BLAS_INIT: Once = Once::new();

/// Parallelism lives at the realization/ε level; keep BLAS single-threaded.
fn init_blas() {
    BLAS_INIT.call_once(|| unsafe { openblas_set_num_threads(1) });
}

/// Row-oriented assembly of s = b − A·x.
struct Rows {
    triplets: (Vec<usize>, Vec<usize>, Vec<f64>),
    b: Vec<f64>,
}

impl Rows {
    fn new() -> Self {
        Self { triplets: (Vec::new(), Vec::new(), Vec::new()), b: Vec::new() }
    }

    /// Append the row s = e(x) (i.e. b = e₀, A = −coefficients).
    fn push_slack(&mut self, e: &LinExpr, scale: f64) {
        let row = self.b.len();
        for &(i, c) in &e.terms {
            self.triplets.0.push(row);
            self.triplets.1.push(i);
            self.triplets.2.push(-c * scale);
        }
        self.b.push(e.constant * scale);
    }

    fn len(&self) -> usize {
        self.b.len()
    }
}

fn psd_scale(entries: &[CLinExpr]) -> f64 {
    entries
        .iter()
        .map(|e| e.re.max_coef().max(e.im.max_coef()))
        .fold(0.0f64, f64::max)
}

/// Upper-triangle, column-major svec of the affine matrix, using the real
/// block when the data is real and [[X, −Y], [Y, X]] otherwise.
fn push_psd(rows: &mut Rows, n: usize, entries: &[CLinExpr], scale: f64, force_embedding: bool) -> usize {
    let is_real = entries.iter().all(|e| e.im.is_constant() && e.im.constant == 0.0);
    let sqrt2 = std::f64::consts::SQRT_2;
    if is_real && !force_embedding {
        for c in 0..n {
            for r in 0..=c {
                let w = if r == c { 1.0 } else { sqrt2 };
                rows.push_slack(&entries[r * n + c].re, scale * w);
            }
        }
        n
    } else {
        let m = 2 * n;
        for c in 0..m {
            for r in 0..=c {
                let w = if r == c { 1.0 } else { sqrt2 };
                let e = match (r < n, c < n) {
                    (true, true) => entries[r * n + c].re.clone(),
                    (true, false) => -entries[r * n + (c - n)].im.clone(),
                    (false, false) => entries[(r - n) * n + (c - n)].re.clone(),
                    (false, true) => unreachable!("upper triangle only"),
                };
                rows.push_slack(&e, scale * w);
            }
        }
        m
    }
}

fn map_status(s: SolverStatus) -> SolveStatus {
    match s {
        SolverStatus::Solved => SolveStatus::Optimal,
        SolverStatus::AlmostSolved => SolveStatus::Inaccurate,
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => SolveStatus::Infeasible,
        _ => SolveStatus::Failed,
    }
}

/// Solve a problem built with [`SdpProblem`]. Never panics on numerical
/// trouble: breakdowns and infeasibility come back as statuses. Only
/// malformed input (unknown variables, oversized blocks) is an error.
pub fn solve_sdp(p: &SdpProblem, s: &SolverSettings) -> Result<SdpSolution> {
    init_blas();
    let n = p.n_vars;
    let cap = p.largest_psd_block();
    if cap > s.psd_cap {
        return Err(Error::Dimension(format!("PSD block of size {cap} exceeds the cap {}", s.psd_cap)));
    }
    let check_expr = |e: &LinExpr| -> Result<()> {
        match e.max_index() {
            Some(i) if i >= n => Err(Error::Dimension(format!("variable {i} referenced but only {n} declared"))),
            _ => Ok(()),
        }
    };
    for c in &p.constraints {
        match c {
            Constraint::Linear { expr, .. } => check_expr(expr)?,
            Constraint::Psd { entries, .. } => {
                for e in entries {
                    check_expr(&e.re)?;
                    check_expr(&e.im)?;
                }
            }
        }
    }
    check_expr(&p.objective.linear)?;
    for (_, a) in &p.objective.squares {
        check_expr(a)?;
    }

    let infeasible = |label: &str| SdpSolution {
        status: SolveStatus::Infeasible,
        x: vec![0.0; n],
        objective: f64::NAN,
        max_violation: f64::INFINITY,
        iterations: 0,
    }
    .with_note(label);

    // Square terms get an auxiliary variable y = (aᵀx + a₀)/m each.
    let n_aux = p.objective.squares.len();
    let n_total = n + n_aux;
    let mut eq_rows = Rows::new();
    let mut ineq_rows = Rows::new();
    let mut psd_rows = Rows::new();
    let mut psd_dims = Vec::new();

    for c in &p.constraints {
        match c {
            Constraint::Linear { label, expr, relation } => {
                let m = expr.max_coef();
                if m == 0.0 {
                    let ok = match relation {
                        Relation::Ge => expr.constant >= 0.0,
                        Relation::Le => expr.constant <= 0.0,
                        Relation::Eq => expr.constant == 0.0,
                    };
                    if !ok {
                        return Ok(infeasible(label));
                    }
                    continue;
                }
                let scale = 1.0 / m;
                match relation {
                    Relation::Ge => ineq_rows.push_slack(expr, scale),
                    Relation::Le => ineq_rows.push_slack(expr, -scale),
                    Relation::Eq => eq_rows.push_slack(expr, scale),
                }
            }
            Constraint::Psd { n: dim, entries, .. } => {
                let m = psd_scale(entries);
                let scale = if m > 0.0 { 1.0 / m } else { 1.0 };
                psd_dims.push(push_psd(&mut psd_rows, *dim, entries, scale, s.force_complex_embedding));
            }
        }
    }

    // Objective: minimize −obj_scale·(linear) + obj_scale·Σ w m² y².
    let lin = &p.objective.linear;
    let mut magnitudes = vec![lin.max_coef()];
    let mut norms = Vec::with_capacity(n_aux);
    for (w, a) in &p.objective.squares {
        let m = a.max_coef().max(1e-300);
        norms.push(m);
        magnitudes.push(w * m * m);
    }
    let peak = magnitudes.iter().cloned().fold(0.0f64, f64::max);
    let obj_scale = if peak > 0.0 { 1.0 / peak } else { 1.0 };
    let mut q = vec![0.0; n_total];
    for &(i, c) in &lin.terms {
        q[i] -= c * obj_scale;
    }
    let mut p_diag = Vec::with_capacity(n_aux);
    for (j, ((w, a), m)) in p.objective.squares.iter().zip(&norms).enumerate() {
        // y_j·m − aᵀx = a₀  ⇔  0 = a₀ + aᵀx − m·y_j
        let mut e = a.clone();
        e.add_term(n + j, -m);
        eq_rows.push_slack(&e, 1.0 / m);
        p_diag.push(2.0 * w * m * m * obj_scale);
    }

    let mut a_i = Vec::new();
    let mut a_j = Vec::new();
    let mut a_v = Vec::new();
    let mut b = Vec::new();
    let mut cones: Vec<SupportedConeT<f64>> = Vec::new();
    for (rows, kind) in [(&eq_rows, 0u8), (&ineq_rows, 1), (&psd_rows, 2)] {
        let base = b.len();
        a_i.extend(rows.triplets.0.iter().map(|r| r + base));
        a_j.extend(rows.triplets.1.iter().copied());
        a_v.extend(rows.triplets.2.iter().copied());
        b.extend(rows.b.iter().copied());
        match kind {
            0 if rows.len() > 0 => cones.push(ZeroConeT(rows.len())),
            1 if rows.len() > 0 => cones.push(NonnegativeConeT(rows.len())),
            2 => cones.extend(psd_dims.iter().map(|&d| PSDTriangleConeT(d))),
            _ => {}
        }
    }
    let a = CscMatrix::new_from_triplets(b.len(), n_total, a_i, a_j, a_v);
    let pm = CscMatrix::new_from_triplets(
        n_total,
        n_total,
        (n..n_total).collect(),
        (n..n_total).collect(),
        p_diag,
    );

    let settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .max_iter(s.max_iter)
        .tol_feas(s.feas_tol)
        .tol_gap_abs(s.gap_tol)
        .tol_gap_rel(s.gap_tol)
        .max_threads(1)
        .chordal_decomposition_enable(false)
        .build()
        .map_err(|e| Error::Config(format!("solver settings: {e:?}")))?;
    let mut solver = match DefaultSolver::new(&pm, &q, &a, &b, &cones, settings) {
        Ok(solver) => solver,
        Err(e) => {
            return Ok(SdpSolution {
                status: SolveStatus::Failed,
                x: vec![0.0; n],
                objective: f64::NAN,
                max_violation: f64::INFINITY,
                iterations: 0,
            }
            .with_note(&format!("{e:?}")))
        }
    };
    solver.solve();
    let sol = &solver.solution;
    let status = map_status(sol.status);
    let x: Vec<f64> = sol.x[..n].to_vec();
    let objective = if status.is_usable() { p.objective.eval(&x) } else { f64::NAN };
    let max_violation = if status.is_usable() { p.max_violation(&x) } else { f64::INFINITY };
    log::trace!(
        "sdp: {} vars, {} rows, status {:?}, {} iterations",
        n_total,
        b.len(),
        sol.status,
        sol.iterations
    );
    Ok(SdpSolution { status, x, objective, max_violation, iterations: sol.iterations })
}

impl SdpSolution {
    fn with_note(self, note: &str) -> Self {
        log::debug!("sdp {}: {note}", self.status);
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{cn_matrix, CMat, C64};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn settings() -> SolverSettings {
        SolverSettings::default()
    }

    #[test]
    fn scalar_schur() {
        // maximize t s.t. [[1 − t, 0], [0, 1]] ⪰ 0
        let mut p = SdpProblem::new();
        let t = p.add_scalar();
        let one = LinExpr::constant(1.0);
        p.psd(
            "schur",
            2,
            vec![
                CLinExpr::real(one.clone() - t.clone()),
                CLinExpr::zero(),
                CLinExpr::zero(),
                CLinExpr::real(one),
            ],
        );
        p.maximize(t.clone(), vec![]);
        let sol = solve_sdp(&p, &settings()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.eval(&t) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn eigenvalue_program() {
        let mut p = SdpProblem::new();
        let x = p.add_psd(2, "X");
        p.equal("trace", x.trace() - 1.0);
        let c = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![C64::new(3.0, 0.0), C64::new(1.0, 0.0)]));
        p.maximize(x.re_trace_with(&c), vec![]);
        let sol = solve_sdp(&p, &settings()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.objective - 3.0).abs() < 1e-6);
        let xm = sol.matrix(&x);
        assert!((xm[(0, 0)].re - 1.0).abs() < 1e-6);
    }

    #[test]
    fn complex_eigenvalue_program_uses_embedding() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = cn_matrix(&mut rng, 4, 4);
        let c = &a + a.adjoint();
        let mut p = SdpProblem::new();
        let x = p.add_psd(4, "X");
        p.equal("trace", x.trace() - 1.0);
        p.maximize(x.re_trace_with(&c), vec![]);
        let sol = solve_sdp(&p, &settings()).unwrap();
        let (eig, _) = crate::linalg::hermitian_eigen(&c);
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.objective - eig[0]).abs() < 1e-6 * eig[0].abs().max(1.0));
    }

    #[test]
    fn concave_quadratic_objective() {
        // maximize 2t − t² → t = 1, value 1
        let mut p = SdpProblem::new();
        let t = p.add_scalar();
        p.maximize(t.clone() * 2.0, vec![(1.0, t.clone())]);
        let sol = solve_sdp(&p, &settings()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.eval(&t) - 1.0).abs() < 1e-6);
        assert!((sol.objective - 1.0).abs() < 1e-8);
    }

    #[test]
    fn infeasible_is_a_status() {
        let mut p = SdpProblem::new();
        let x = p.add_psd(2, "X");
        p.equal("trace", x.trace() + 1.0);
        p.maximize(LinExpr::zero(), vec![]);
        let sol = solve_sdp(&p, &settings()).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
        let mut q = SdpProblem::new();
        let _ = q.add_scalar();
        q.ge("const", LinExpr::constant(-1.0));
        assert_eq!(solve_sdp(&q, &settings()).unwrap().status, SolveStatus::Infeasible);
    }

    #[test]
    fn cap_enforced() {
        let mut p = SdpProblem::new();
        p.add_psd(5, "X");
        let s = SolverSettings { psd_cap: 4, ..SolverSettings::default() };
        assert!(matches!(solve_sdp(&p, &s), Err(Error::Dimension(_))));
    }

    #[test]
    fn real_block_and_embedding_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..5 {
            let a = cn_matrix(&mut rng, 5, 5).map(|z| C64::new(z.re, 0.0));
            let c = &a + a.transpose();
            let b = cn_matrix(&mut rng, 5, 5).map(|z| C64::new(z.re, 0.0));
            let d = &b * b.transpose();
            let mut p = SdpProblem::new();
            let x = p.add_psd(5, "X");
            p.equal("trace", x.trace() - 1.0);
            p.le("budget", x.re_trace_with(&d) - d.trace().re / 5.0);
            p.maximize(x.re_trace_with(&c), vec![]);
            let real = solve_sdp(&p, &settings()).unwrap();
            let emb = solve_sdp(&p, &SolverSettings { force_complex_embedding: true, ..settings() }).unwrap();
            assert_eq!(real.status, SolveStatus::Optimal);
            assert_eq!(emb.status, SolveStatus::Optimal);
            assert!((real.objective - emb.objective).abs() <= 1e-8 * real.objective.abs().max(1.0));
        }
    }
}
