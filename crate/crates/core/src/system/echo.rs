use std::f64::consts::PI;

use super::channels::ChannelSet;
use super::steering::{steering_derivative, steering_vector};
use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec, C64};
use crate::metrics::PhaseProfile;

/// BS→IRS→target→IRS→BS response H_BB = c·bᵀ and its θ-derivative.
#[derive(Debug, Clone)]
pub struct CascadedEcho {
    pub b: CVec,
    pub c: CVec,
    pub b_dot: CVec,
    pub c_dot: CVec,
    pub h: CMat,
    pub h_dot: CMat,
}

/// b = G_tᵀΦᵀa(θ), c = G_rΦᵀa(θ); the dotted vectors replace a(θ) by
/// ∂a/∂θ.
pub fn cascaded_echo(ch: &ChannelSet, v: &PhaseProfile) -> Result<CascadedEcho> {
    let n = ch.n_irs();
    if v.len() != n {
        return Err(Error::Dimension(format!("phase profile has {} entries, IRS has {n}", v.len())));
    }
    let theta = ch.scene.theta;
    let a = steering_vector(theta, n, ch.spacing_ratio);
    let a_dot = steering_derivative(theta, n, ch.spacing_ratio);
    let va = v.v().component_mul(&a);
    let va_dot = v.v().component_mul(&a_dot);
    let b = ch.g_t.transpose() * &va;
    let c = &ch.g_r * &va;
    let b_dot = ch.g_t.transpose() * &va_dot;
    let c_dot = &ch.g_r * &va_dot;
    let h = &c * b.transpose();
    let h_dot = &c_dot * b.transpose() + &c * b_dot.transpose();
    Ok(CascadedEcho { b, c, b_dot, c_dot, h, h_dot })
}

/// The same pair built from the phase vector directly:
/// H_BB = G_r Ã v vᵀ Ãᵀ G_t and
/// Ḣ_BB = j2π(d/λ)cosθ · G_r Ã (D v vᵀ + v vᵀ Dᵀ) Ãᵀ G_t.
pub fn lifted_echo(ch: &ChannelSet, v: &PhaseProfile) -> Result<(CMat, CMat)> {
    let n = ch.n_irs();
    if v.len() != n {
        return Err(Error::Dimension(format!("phase profile has {} entries, IRS has {n}", v.len())));
    }
    let theta = ch.scene.theta;
    let a = steering_vector(theta, n, ch.spacing_ratio);
    let a_diag = CMat::from_diagonal(&a);
    let d = CMat::from_diagonal(&CVec::from_fn(n, |i, _| C64::new(i as f64, 0.0)));
    let vv = v.v() * v.v().transpose();
    let left = &ch.g_r * &a_diag;
    let right = a_diag.transpose() * &ch.g_t;
    let h = &left * &vv * &right;
    let k = C64::new(0.0, 2.0 * PI * ch.spacing_ratio * theta.cos());
    let inner = &d * &vv + &vv * d.transpose();
    let h_dot = (&left * inner * &right).map(|z| z * k);
    Ok((h, h_dot))
}

/// Squared magnitude of the steering-derivative scale, 4π²(d/λ)²cos²θ.
pub fn derivative_scale(ch: &ChannelSet) -> f64 {
    let k = 2.0 * PI * ch.spacing_ratio * ch.scene.theta.cos();
    k * k
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{frobenius, singular_values};
    use crate::system::{synthesize_channels, PathLossModel, SceneLayout, SystemConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn channels(n: usize, seed: u64) -> ChannelSet {
        let cfg = SystemConfig::desk_default().with_sizes(4, n);
        let layout = SceneLayout::approximate_default(cfg.k_users);
        synthesize_channels(&cfg, &layout, &PathLossModel::default(), None, seed).unwrap()
    }

    #[test]
    fn h_is_rank_one() {
        let ch = channels(8, 3);
        let v = PhaseProfile::random(8, &mut ChaCha8Rng::seed_from_u64(2));
        let e = cascaded_echo(&ch, &v).unwrap();
        let s = singular_values(&e.h);
        assert!(s[1] <= 1e-10 * s[0]);
    }

    #[test]
    fn single_element_has_no_derivative() {
        let ch = channels(1, 3);
        let e = cascaded_echo(&ch, &PhaseProfile::ones(1)).unwrap();
        assert!(e.h_dot.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn lifted_form_agrees() {
        for seed in 0..100 {
            let ch = channels(6, seed);
            let v = PhaseProfile::random(6, &mut ChaCha8Rng::seed_from_u64(seed + 1000));
            let e = cascaded_echo(&ch, &v).unwrap();
            let (h, h_dot) = lifted_echo(&ch, &v).unwrap();
            let scale = frobenius(&e.h);
            for (x, y) in e.h.iter().zip(h.iter()) {
                assert!((x - y).norm() <= 1e-12 * scale);
            }
            let scale_dot = frobenius(&e.h_dot);
            for (x, y) in e.h_dot.iter().zip(h_dot.iter()) {
                assert!((x - y).norm() <= 1e-12 * scale_dot);
            }
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let mut ch = channels(8, 5);
        let v = PhaseProfile::random(8, &mut ChaCha8Rng::seed_from_u64(9));
        let analytic = cascaded_echo(&ch, &v).unwrap().h_dot;
        let theta = ch.scene.theta;
        let step = 1e-6;
        ch.scene.theta = theta + step;
        let plus = cascaded_echo(&ch, &v).unwrap().h;
        ch.scene.theta = theta - step;
        let minus = cascaded_echo(&ch, &v).unwrap().h;
        let fd = (plus - minus).map(|z| z / (2.0 * step));
        let err = frobenius(&(&analytic - &fd)) / frobenius(&analytic);
        assert!(err <= 1e-6, "rel err {err}");
    }
}
