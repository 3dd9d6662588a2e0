use std::collections::BTreeMap;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use crate::linalg::{hermitian_eigen, CMat, C64};

/// Real affine expression Σ cᵢ·xᵢ + c₀ over the flat real parameter vector.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self { terms: Vec::new(), constant: c }
    }

    pub fn var(index: usize) -> Self {
        Self { terms: vec![(index, 1.0)], constant: 0.0 }
    }

    pub fn add_term(&mut self, index: usize, coef: f64) {
        if coef != 0.0 {
            self.terms.push((index, coef));
        }
    }

    /// Merge repeated indices and drop zeros; terms come out sorted.
    pub fn compressed(&self) -> Self {
        let mut map = BTreeMap::new();
        for &(i, c) in &self.terms {
            *map.entry(i).or_insert(0.0) += c;
        }
        Self { terms: map.into_iter().filter(|&(_, c)| c != 0.0).collect(), constant: self.constant }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(i, c)| c * x[i]).sum::<f64>() + self.constant
    }

    pub fn max_coef(&self) -> f64 {
        self.terms.iter().fold(0.0f64, |m, &(_, c)| m.max(c.abs()))
    }

    pub fn max_index(&self) -> Option<usize> {
        self.terms.iter().map(|&(i, _)| i).max()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|&(_, c)| c == 0.0)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { terms: self.terms.iter().map(|&(i, c)| (i, c * s)).collect(), constant: self.constant * s }
    }
}

impl Add for LinExpr {
    type Output = LinExpr;
    fn add(mut self, rhs: LinExpr) -> LinExpr {
        self += rhs;
        self
    }
}

impl AddAssign for LinExpr {
    fn add_assign(&mut self, rhs: LinExpr) {
        self.terms.extend(rhs.terms);
        self.constant += rhs.constant;
    }
}

impl Sub for LinExpr {
    type Output = LinExpr;
    fn sub(self, rhs: LinExpr) -> LinExpr {
        self + (-rhs)
    }
}

impl Neg for LinExpr {
    type Output = LinExpr;
    fn neg(self) -> LinExpr {
        self.scale(-1.0)
    }
}

impl Mul<f64> for LinExpr {
    type Output = LinExpr;
    fn mul(self, s: f64) -> LinExpr {
        self.scale(s)
    }
}

impl Add<f64> for LinExpr {
    type Output = LinExpr;
    fn add(mut self, c: f64) -> LinExpr {
        self.constant += c;
        self
    }
}

impl Sub<f64> for LinExpr {
    type Output = LinExpr;
    fn sub(mut self, c: f64) -> LinExpr {
        self.constant -= c;
        self
    }
}

/// Complex affine expression: real and imaginary parts as real expressions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CLinExpr {
    pub re: LinExpr,
    pub im: LinExpr,
}

impl CLinExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn real(re: LinExpr) -> Self {
        Self { re, im: LinExpr::zero() }
    }

    pub fn constant(c: C64) -> Self {
        Self { re: LinExpr::constant(c.re), im: LinExpr::constant(c.im) }
    }

    pub fn conj(&self) -> Self {
        Self { re: self.re.clone(), im: -self.im.clone() }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            re: self.re.scale(s.re) - self.im.scale(s.im),
            im: self.im.scale(s.re) + self.re.scale(s.im),
        }
    }

    pub fn eval(&self, x: &[f64]) -> C64 {
        C64::new(self.re.eval(x), self.im.eval(x))
    }
}

impl Add for CLinExpr {
    type Output = CLinExpr;
    fn add(self, rhs: CLinExpr) -> CLinExpr {
        CLinExpr { re: self.re + rhs.re, im: self.im + rhs.im }
    }
}

impl Sub for CLinExpr {
    type Output = CLinExpr;
    fn sub(self, rhs: CLinExpr) -> CLinExpr {
        CLinExpr { re: self.re - rhs.re, im: self.im - rhs.im }
    }
}

/// Hermitian n×n matrix variable stored as n² real parameters starting at
/// `offset`: the n diagonal entries, then (Re, Im) of each upper entry in
/// row-major order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HermVar {
    pub offset: usize,
    pub n: usize,
}

impl HermVar {
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn pair_index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j < self.n);
        let pairs_before = i * self.n - i * (i + 1) / 2;
        self.offset + self.n + 2 * (pairs_before + (j - i - 1))
    }

    /// Affine expression of entry (i, j).
    pub fn entry(&self, i: usize, j: usize) -> CLinExpr {
        use std::cmp::Ordering;
        match i.cmp(&j) {
            Ordering::Equal => CLinExpr::real(LinExpr::var(self.offset + i)),
            Ordering::Less => {
                let p = self.pair_index(i, j);
                CLinExpr { re: LinExpr::var(p), im: LinExpr::var(p + 1) }
            }
            Ordering::Greater => self.entry(j, i).conj(),
        }
    }

    /// tr(C·X) as a complex affine expression.
    pub fn trace_with(&self, c: &CMat) -> CLinExpr {
        assert_eq!(c.shape(), (self.n, self.n), "trace_with: shape mismatch");
        let mut out = CLinExpr::zero();
        for i in 0..self.n {
            out.re.add_term(self.offset + i, c[(i, i)].re);
            out.im.add_term(self.offset + i, c[(i, i)].im);
            for j in i + 1..self.n {
                let p = self.pair_index(i, j);
                let sum = c[(i, j)] + c[(j, i)];
                let diff = (c[(j, i)] - c[(i, j)]) * C64::i();
                out.re.add_term(p, sum.re);
                out.im.add_term(p, sum.im);
                out.re.add_term(p + 1, diff.re);
                out.im.add_term(p + 1, diff.im);
            }
        }
        out
    }

    /// Re tr(C·X); exact for Hermitian C.
    pub fn re_trace_with(&self, c: &CMat) -> LinExpr {
        self.trace_with(c).re
    }

    pub fn trace(&self) -> LinExpr {
        let mut e = LinExpr::zero();
        for i in 0..self.n {
            e.add_term(self.offset + i, 1.0);
        }
        e
    }

    pub fn value(&self, x: &[f64]) -> CMat {
        CMat::from_fn(self.n, self.n, |i, j| self.entry(i, j).eval(x))
    }

    /// Write a Hermitian matrix into the parameter vector.
    pub fn set_value(&self, x: &mut [f64], m: &CMat) {
        for i in 0..self.n {
            x[self.offset + i] = m[(i, i)].re;
            for j in i + 1..self.n {
                let p = self.pair_index(i, j);
                x[p] = m[(i, j)].re;
                x[p + 1] = m[(i, j)].im;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    /// expr ≥ 0
    Ge,
    /// expr ≤ 0
    Le,
    /// expr = 0
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Constraint {
    Linear { label: String, expr: LinExpr, relation: Relation },
    /// Hermitian affine matrix (row-major n×n entries) required to be PSD.
    Psd { label: String, n: usize, entries: Vec<CLinExpr> },
}

impl Constraint {
    pub fn label(&self) -> &str {
        match self {
            Constraint::Linear { label, .. } | Constraint::Psd { label, .. } => label,
        }
    }

    /// Signed violation at `x`: positive when violated, measured after
    /// dividing by the largest coefficient of the constraint.
    pub fn violation(&self, x: &[f64]) -> f64 {
        match self {
            Constraint::Linear { expr, relation, .. } => {
                let scale = expr.max_coef().max(expr.constant.abs()).max(1e-300);
                let v = expr.eval(x) / scale;
                match relation {
                    Relation::Ge => -v,
                    Relation::Le => v,
                    Relation::Eq => v.abs(),
                }
            }
            Constraint::Psd { n, entries, .. } => {
                let scale = entries
                    .iter()
                    .map(|e| e.re.max_coef().max(e.im.max_coef()).max(e.re.constant.abs()).max(e.im.constant.abs()))
                    .fold(0.0f64, f64::max)
                    .max(1e-300);
                let m = CMat::from_fn(*n, *n, |i, j| entries[i * n + j].eval(x) / scale);
                let (eig, _) = hermitian_eigen(&m);
                -eig.last().copied().unwrap_or(0.0)
            }
        }
    }
}

/// Maximize `linear − Σ wᵢ·(affineᵢ)²`, wᵢ ≥ 0.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Objective {
    pub linear: LinExpr,
    pub squares: Vec<(f64, LinExpr)>,
}

impl Objective {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.linear.eval(x) - self.squares.iter().map(|(w, a)| w * a.eval(x).powi(2)).sum::<f64>()
    }
}

/// Problem data. Variables are declared through the builder methods; the
/// problem is immutable once handed to the solver.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SdpProblem {
    pub n_vars: usize,
    pub hermitian: Vec<HermVar>,
    pub scalars: Vec<usize>,
    pub constraints: Vec<Constraint>,
    pub objective: Objective,
}

impl SdpProblem {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declare an n×n Hermitian variable; PSD-ness is not implied.
    pub fn add_hermitian(&mut self, n: usize) -> HermVar {
        let v = HermVar { offset: self.n_vars, n };
        self.n_vars += n * n;
        self.hermitian.push(v);
        v
    }

    /// Declare an n×n Hermitian variable constrained to be PSD.
    pub fn add_psd(&mut self, n: usize, label: &str) -> HermVar {
        let v = self.add_hermitian(n);
        self.psd_var(&v, label);
        v
    }

    pub fn add_scalar(&mut self) -> LinExpr {
        let i = self.n_vars;
        self.n_vars += 1;
        self.scalars.push(i);
        LinExpr::var(i)
    }

    pub fn ge(&mut self, label: &str, expr: LinExpr) {
        self.linear(label, expr, Relation::Ge);
    }

    pub fn le(&mut self, label: &str, expr: LinExpr) {
        self.linear(label, expr, Relation::Le);
    }

    pub fn equal(&mut self, label: &str, expr: LinExpr) {
        self.linear(label, expr, Relation::Eq);
    }

    fn linear(&mut self, label: &str, expr: LinExpr, relation: Relation) {
        self.constraints.push(Constraint::Linear { label: label.to_string(), expr: expr.compressed(), relation });
    }

    /// Affine Hermitian matrix ⪰ 0; `entries` is row-major n×n and only the
    /// upper triangle is read, the lower one is taken as its conjugate.
    pub fn psd(&mut self, label: &str, n: usize, entries: Vec<CLinExpr>) {
        assert_eq!(entries.len(), n * n, "psd: expected n² entries");
        let mut full = entries;
        for i in 0..n {
            let d = &mut full[i * n + i];
            d.im = LinExpr::zero();
            for j in 0..i {
                full[i * n + j] = full[j * n + i].conj();
            }
        }
        let full = full
            .into_iter()
            .map(|e| CLinExpr { re: e.re.compressed(), im: e.im.compressed() })
            .collect();
        self.constraints.push(Constraint::Psd { label: label.to_string(), n, entries: full });
    }

    pub fn psd_var(&mut self, v: &HermVar, label: &str) {
        let entries = (0..v.n * v.n).map(|k| v.entry(k / v.n, k % v.n)).collect();
        self.psd(label, v.n, entries);
    }

    /// X_ii = 1 for every i.
    pub fn unit_diagonal(&mut self, v: &HermVar, label: &str) {
        for i in 0..v.n {
            self.equal(&format!("{label}[{i}]"), v.entry(i, i).re - 1.0);
        }
    }

    pub fn maximize(&mut self, linear: LinExpr, squares: Vec<(f64, LinExpr)>) {
        assert!(squares.iter().all(|(w, _)| *w >= 0.0), "square weights must be non-negative");
        self.objective = Objective {
            linear: linear.compressed(),
            squares: squares.into_iter().map(|(w, a)| (w, a.compressed())).collect(),
        };
    }

    pub fn max_violation(&self, x: &[f64]) -> f64 {
        self.constraints.iter().map(|c| c.violation(x)).fold(0.0, f64::max)
    }

    pub fn largest_psd_block(&self) -> usize {
        self.constraints
            .iter()
            .filter_map(|c| match c {
                Constraint::Psd { n, .. } => Some(*n),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }
}

/// Result of a solve. `x` is the flat parameter vector; use the variable
/// handles to read matrices and scalars back out.
#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolution {
    pub status: super::SolveStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub max_violation: f64,
    pub iterations: u32,
}

impl SdpSolution {
    pub fn matrix(&self, v: &HermVar) -> CMat {
        v.value(&self.x)
    }

    pub fn eval(&self, e: &LinExpr) -> f64 {
        e.eval(&self.x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{cn_matrix, trace_prod};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn trace_with_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut p = SdpProblem::new();
        let _pad = p.add_scalar();
        let v = p.add_hermitian(4);
        let a = cn_matrix(&mut rng, 4, 4);
        let x_mat = &a * a.adjoint();
        let c = cn_matrix(&mut rng, 4, 4);
        let mut x = vec![0.0; p.n_vars];
        v.set_value(&mut x, &x_mat);
        assert!((v.value(&x) - &x_mat).norm() < 1e-12);
        let expr = v.trace_with(&c).eval(&x);
        assert!((expr - trace_prod(&c, &x_mat)).norm() < 1e-10);
        assert!((v.trace().eval(&x) - x_mat.trace().re).abs() < 1e-12);
    }

    #[test]
    fn expression_algebra() {
        let e = LinExpr::var(0) * 2.0 + LinExpr::var(1) - LinExpr::var(0) + 3.0;
        let c = e.compressed();
        assert_eq!(c.terms, vec![(0, 1.0), (1, 1.0)]);
        assert_eq!(c.eval(&[2.0, 5.0]), 10.0);
        let z = CLinExpr::real(LinExpr::var(0)).scale(C64::new(0.0, 2.0));
        assert_eq!(z.eval(&[1.5]), C64::new(0.0, 3.0));
    }

    #[test]
    fn violation_signs() {
        let mut p = SdpProblem::new();
        let t = p.add_scalar();
        p.ge("t>=1", t.clone() - 1.0);
        p.le("t<=2", t.clone() - 2.0);
        assert!(p.max_violation(&[1.5]) <= 0.0);
        assert!(p.max_violation(&[3.0]) > 0.0);
        let mut q = SdpProblem::new();
        let v = q.add_psd(2, "X");
        let mut x = vec![0.0; q.n_vars];
        v.set_value(&mut x, &CMat::from_diagonal_element(2, 2, C64::new(1.0, 0.0)));
        assert!(q.max_violation(&x) <= 0.0);
        x[v.offset] = -1.0;
        assert!(q.max_violation(&x) > 0.0);
    }
}
