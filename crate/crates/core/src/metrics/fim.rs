use nalgebra::{Matrix2, Matrix3, RowVector2};

use super::PhaseProfile;
use crate::error::{Error, Result};
use crate::linalg::{trace_prod, CMat, C64};
use crate::system::{cascaded_echo, CascadedEcho, ChannelSet};
use crate::tolerances::SCHUR_REL;

/// Fisher information over ξ = [θ, Re α, Im α].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FimMatrix {
    pub f_theta_theta: f64,
    pub f_theta_alpha: RowVector2<f64>,
    pub f_alpha_alpha: Matrix2<f64>,
}

impl FimMatrix {
    pub fn to_matrix(&self) -> Matrix3<f64> {
        let mut m = Matrix3::zeros();
        m[(0, 0)] = self.f_theta_theta;
        for j in 0..2 {
            m[(0, j + 1)] = self.f_theta_alpha[j];
            m[(j + 1, 0)] = self.f_theta_alpha[j];
            for i in 0..2 {
                m[(i + 1, j + 1)] = self.f_alpha_alpha[(i, j)];
            }
        }
        m
    }

    /// f_θθ − f_θα f_αα⁻¹ f_θαᵀ.
    pub fn schur_complement(&self) -> Result<f64> {
        let faa = self.f_alpha_alpha;
        let inv = faa
            .try_inverse()
            .ok_or_else(|| Error::NonIdentifiable("zero echo energy (f_αα singular)".into()))?;
        let coupling = (self.f_theta_alpha * inv * self.f_theta_alpha.transpose())[(0, 0)];
        Ok(self.f_theta_theta - coupling)
    }
}

/// The three echo traces that everything sensing-related is built from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EchoTraces {
    /// tr(Ḣ R Ḣ†)
    pub dot_dot: f64,
    /// tr(H R Ḣ†)
    pub cross: C64,
    /// tr(H R H†)
    pub direct: f64,
}

impl EchoTraces {
    pub fn new(echo: &CascadedEcho, r_x: &CMat) -> Self {
        let hr = &echo.h * r_x;
        let hdr = &echo.h_dot * r_x;
        Self {
            dot_dot: trace_prod(&hdr, &echo.h_dot.adjoint()).re,
            cross: trace_prod(&hr, &echo.h_dot.adjoint()),
            direct: trace_prod(&hr, &echo.h.adjoint()).re,
        }
    }

    /// J = tr(ḢRḢ†) − |tr(HRḢ†)|²/tr(HRH†).
    pub fn j_value(&self) -> Result<f64> {
        if !(self.direct > 0.0) {
            return Err(Error::NonIdentifiable("tr(H R H†) = 0".into()));
        }
        Ok(self.dot_dot - self.cross.norm_sqr() / self.direct)
    }
}

pub fn fim_from_traces(t: &EchoTraces, block_length: usize, sigma_s2: f64, alpha: C64) -> FimMatrix {
    let g = 2.0 * block_length as f64 / sigma_s2;
    let ac = alpha.conj() * t.cross;
    FimMatrix {
        f_theta_theta: g * alpha.norm_sqr() * t.dot_dot,
        // Re{α* T [1, j]} = [Re(α*T), −Im(α*T)]
        f_theta_alpha: RowVector2::new(g * ac.re, -g * ac.im),
        f_alpha_alpha: Matrix2::identity() * (g * t.direct),
    }
}

/// FIM of ξ for transmit covariance `r_x` and block length L.
pub fn fim_theta(
    ch: &ChannelSet,
    v: &PhaseProfile,
    r_x: &CMat,
    block_length: usize,
    sigma_s2: f64,
) -> Result<FimMatrix> {
    let echo = cascaded_echo(ch, v)?;
    let t = EchoTraces::new(&echo, r_x);
    Ok(fim_from_traces(&t, block_length, sigma_s2, ch.scene.alpha))
}

/// CRB_θ = 1 / (Schur complement of f_αα).
pub fn crb_theta_fim(fim: &FimMatrix) -> Result<f64> {
    let s = fim.schur_complement()?;
    if !(s > SCHUR_REL * fim.f_theta_theta.abs()) || s <= 0.0 {
        return Err(Error::NonIdentifiable(format!("Schur complement {s:e} is not positive")));
    }
    Ok(1.0 / s)
}

pub fn crb_from_j(j: f64, block_length: usize, sigma_s2: f64, alpha: C64) -> Result<f64> {
    let denom = 2.0 * block_length as f64 * alpha.norm_sqr() * j;
    if !(denom > 0.0) {
        return Err(Error::NonIdentifiable(format!("J = {j:e} is not positive")));
    }
    Ok(sigma_s2 / denom)
}

/// CRB_θ = σ_s² / (2L|α|²J).
pub fn crb_theta_closed(
    ch: &ChannelSet,
    v: &PhaseProfile,
    r_x: &CMat,
    block_length: usize,
    sigma_s2: f64,
) -> Result<f64> {
    let echo = cascaded_echo(ch, v)?;
    let j = EchoTraces::new(&echo, r_x).j_value()?;
    crb_from_j(j, block_length, sigma_s2, ch.scene.alpha)
}

/// J(w, v) for a design.
pub fn j_value(ch: &ChannelSet, v: &PhaseProfile, r_x: &CMat) -> Result<f64> {
    let echo = cascaded_echo(ch, v)?;
    EchoTraces::new(&echo, r_x).j_value()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{cn_matrix, rel_err, CVec};
    use crate::system::{synthesize_channels, PathLossModel, SceneLayout, SystemConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn instance(seed: u64) -> (ChannelSet, PhaseProfile, CMat) {
        let cfg = SystemConfig::desk_default().with_sizes(4, 6);
        let layout = SceneLayout::approximate_default(cfg.k_users);
        let ch = synthesize_channels(&cfg, &layout, &PathLossModel::default(), None, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
        let v = PhaseProfile::random(cfg.n_irs, &mut rng);
        let x = cn_matrix(&mut rng, 4, 4);
        (ch, v, &x * x.adjoint())
    }

    fn diag_fim(t: f64, a: f64) -> FimMatrix {
        FimMatrix {
            f_theta_theta: t,
            f_theta_alpha: RowVector2::zeros(),
            f_alpha_alpha: Matrix2::identity() * a,
        }
    }

    #[test]
    fn zero_covariance_zero_fim() {
        let (ch, v, r) = instance(1);
        let f = fim_theta(&ch, &v, &r.scale(0.0), 1280, 1e-12).unwrap();
        assert_eq!(f.to_matrix(), Matrix3::zeros());
        assert!(matches!(crb_theta_fim(&f), Err(Error::NonIdentifiable(_))));
    }

    #[test]
    fn linear_in_covariance() {
        let (ch, v, r) = instance(2);
        let f1 = fim_theta(&ch, &v, &r, 1280, 1e-12).unwrap().to_matrix();
        let f3 = fim_theta(&ch, &v, &r.scale(3.0), 1280, 1e-12).unwrap().to_matrix();
        for (a, b) in f1.iter().zip(f3.iter()) {
            assert!((3.0 * a - b).abs() <= 1e-12 * b.abs().max(1e-300));
        }
    }

    #[test]
    fn diagonal_crb() {
        assert!((crb_theta_fim(&diag_fim(4.0, 2.0)).unwrap() - 0.25).abs() < 1e-15);
        assert!((crb_theta_fim(&diag_fim(7.0, 0.5)).unwrap() - 1.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn crb_matches_inverse_entry() {
        for seed in 0..30 {
            let (ch, v, r) = instance(seed);
            let f = fim_theta(&ch, &v, &r, 1280, 1e-12).unwrap();
            let inv = f.to_matrix().try_inverse().unwrap();
            let crb = crb_theta_fim(&f).unwrap();
            assert!(rel_err(crb, inv[(0, 0)]) <= 1e-10, "seed {seed}");
        }
    }

    #[test]
    fn fim_structure() {
        let (ch, v, r) = instance(4);
        let f = fim_theta(&ch, &v, &r, 1280, 1e-12).unwrap();
        let m = f.to_matrix();
        assert_eq!(m, m.transpose());
        assert_eq!(f.f_alpha_alpha[(0, 1)], 0.0);
        assert_eq!(f.f_alpha_alpha[(0, 0)], f.f_alpha_alpha[(1, 1)]);
        let eig = m.symmetric_eigenvalues();
        let scale = eig.amax();
        assert!(eig.iter().all(|&e| e >= -1e-10 * scale));
    }

    #[test]
    fn closed_form_scaling_laws() {
        let (mut ch, v, r) = instance(5);
        let base = crb_theta_closed(&ch, &v, &r, 1280, 1e-12).unwrap();
        let doubled = crb_theta_closed(&ch, &v, &r.scale(2.0), 1280, 1e-12).unwrap();
        assert!(rel_err(doubled, base / 2.0) <= 1e-14);
        ch.scene.alpha *= 2.0;
        let quartered = crb_theta_closed(&ch, &v, &r, 1280, 1e-12).unwrap();
        assert!(rel_err(quartered, base / 4.0) <= 1e-14);
    }

    #[test]
    fn fim_matches_finite_difference_jacobian() {
        let (mut ch, v, _) = instance(6);
        ch.scene.alpha = C64::new(3e-6, -1.2e-6);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let cols = 16;
        let x = cn_matrix(&mut rng, 4, cols);
        let r = (&x * x.adjoint()).scale(1.0 / cols as f64);
        let sigma = 1e-12;
        let mean = |ch: &ChannelSet, alpha: C64| -> CVec {
            let e = cascaded_echo(ch, &v).unwrap();
            let hx = &e.h * &x;
            CVec::from_iterator(hx.len(), hx.iter().map(|z| z * alpha))
        };
        let theta = ch.scene.theta;
        let alpha = ch.scene.alpha;
        let h = 1e-6;
        let mut plus = ch.clone();
        plus.scene.theta = theta + h;
        let mut minus = ch.clone();
        minus.scene.theta = theta - h;
        let d_theta = (mean(&plus, alpha) - mean(&minus, alpha)) / C64::new(2.0 * h, 0.0);
        let ha = alpha.norm() * 1e-3;
        let d_re = (mean(&ch, alpha + ha) - mean(&ch, alpha - ha)) / C64::new(2.0 * ha, 0.0);
        let d_im = (mean(&ch, alpha + C64::new(0.0, ha)) - mean(&ch, alpha - C64::new(0.0, ha))) / C64::new(2.0 * ha, 0.0);
        let cols_j = [d_theta, d_re, d_im];
        let mut oracle = Matrix3::zeros();
        for i in 0..3 {
            for j in 0..3 {
                oracle[(i, j)] = 2.0 / sigma * cols_j[i].dotc(&cols_j[j]).re;
            }
        }
        let f = fim_theta(&ch, &v, &r, cols, sigma).unwrap().to_matrix();
        let err = (f - oracle).norm() / oracle.norm();
        assert!(err <= 1e-4, "rel err {err}");
    }
}
