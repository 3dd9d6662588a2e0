//! Dense complex linear-algebra helpers shared by every module.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const J: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// tr(A·B) without forming the product.
pub fn trace_prod(a: &CMat, b: &CMat) -> C64 {
    assert_eq!(a.ncols(), b.nrows());
    assert_eq!(a.nrows(), b.ncols());
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// x† A x for a column vector x.
pub fn quad_form(a: &CMat, x: &CVec) -> C64 {
    (x.adjoint() * a * x)[(0, 0)]
}

/// Row vector times matrix times its adjoint: h A h†.
pub fn row_quad(h: &CMat, a: &CMat) -> f64 {
    debug_assert_eq!(h.nrows(), 1);
    (h * a * h.adjoint())[(0, 0)].re
}

pub fn outer(x: &CVec) -> CMat {
    x * x.adjoint()
}

pub fn hermitian_part(a: &CMat) -> CMat {
    (a + a.adjoint()).scale(0.5)
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues sorted descending.
pub fn hermitian_eigen(a: &CMat) -> (Vec<f64>, CMat) {
    let eig = SymmetricEigen::new(hermitian_part(a));
    let n = a.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

pub fn min_eigenvalue(a: &CMat) -> f64 {
    let (vals, _) = hermitian_eigen(a);
    vals.last().copied().unwrap_or(0.0)
}

/// Singular values, descending.
pub fn singular_values(a: &CMat) -> Vec<f64> {
    let mut s: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

pub fn frobenius(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Draw a circularly-symmetric complex Gaussian with unit variance.
pub fn cn01<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn cn_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| cn01(rng))
}

pub fn cn_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVec {
    CVec::from_fn(n, |_, _| cn01(rng))
}

/// Sample from CN(0, A) for a Hermitian PSD A via its eigen-decomposition.
pub struct GaussianSampler {
    factor: CMat,
}

impl GaussianSampler {
    pub fn new(cov: &CMat) -> Self {
        let (vals, vecs) = hermitian_eigen(cov);
        let n = cov.nrows();
        // Eigenvalues at rounding level are treated as exact zeros.
        let floor = vals.first().copied().unwrap_or(0.0).max(0.0) * n as f64 * f64::EPSILON;
        let mut factor = CMat::zeros(n, n);
        for (j, &lam) in vals.iter().enumerate() {
            let s = if lam > floor { lam.sqrt() } else { 0.0 };
            for i in 0..n {
                factor[(i, j)] = vecs[(i, j)] * s;
            }
        }
        Self { factor }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> CVec {
        let z = cn_vector(rng, self.factor.ncols());
        &self.factor * z
    }
}

/// Principal component √λ₁·u₁ of a Hermitian PSD matrix.
pub fn principal_component(a: &CMat) -> CVec {
    let (vals, vecs) = hermitian_eigen(a);
    let s = vals.first().copied().unwrap_or(0.0).max(0.0).sqrt();
    vecs.column(0).map(|z| z * s)
}

pub fn db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
