use super::{CovarianceSet, PhaseProfile};
use crate::error::{Error, Result};
use crate::linalg::{row_quad, CMat};
use crate::system::ChannelSet;

/// Receiver noise powers in watts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoisePowers {
    pub scu: f64,
    pub eve: f64,
    pub echo: f64,
}

impl NoisePowers {
    pub fn from_config(cfg: &crate::system::SystemConfig) -> Self {
        Self { scu: cfg.sigma_c2, eve: cfg.sigma_e2, echo: cfg.sigma_s2 }
    }
}

fn quotient(h: &CMat, cov: &CovarianceSet, k: usize, noise: f64) -> f64 {
    let signal = row_quad(h, &cov.w_c[k]);
    let interference = row_quad(h, &(&cov.r_x - &cov.w_c[k]));
    signal / (interference + noise)
}

fn check_k(cov: &CovarianceSet, k: usize) -> Result<()> {
    if k >= cov.k_users() {
        return Err(Error::Index { index: k, len: cov.k_users() });
    }
    Ok(())
}

/// SINR of SCU k: ĥW_c,kĥ† / (ĥ(R_x − W_c,k)ĥ† + σ²).
pub fn sinr_scu(ch: &ChannelSet, v: &PhaseProfile, cov: &CovarianceSet, k: usize, sigma_c2: f64) -> Result<f64> {
    check_k(cov, k)?;
    let h = ch.composite_scu(v, k)?;
    Ok(quotient(&h, cov, k, sigma_c2))
}

/// SINR at the eavesdropper when intercepting SCU k's stream. The EVE
/// channel is the same for every k.
pub fn sinr_eve(ch: &ChannelSet, v: &PhaseProfile, cov: &CovarianceSet, k: usize, sigma_e2: f64) -> Result<f64> {
    check_k(cov, k)?;
    let h = ch.composite_eve(v)?;
    Ok(quotient(&h, cov, k, sigma_e2))
}

/// (SCU SINR, EVE SINR) for every user.
pub fn all_sinrs(ch: &ChannelSet, v: &PhaseProfile, cov: &CovarianceSet, noise: NoisePowers) -> Result<Vec<(f64, f64)>> {
    let he = ch.composite_eve(v)?;
    (0..cov.k_users())
        .map(|k| {
            let h = ch.composite_scu(v, k)?;
            Ok((quotient(&h, cov, k, noise.scu), quotient(&he, cov, k, noise.eve)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{cn_vector, C64};
    use crate::metrics::BeamformerSet;
    use crate::system::{synthesize_channels, PathLossModel, SceneLayout, SystemConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(k_users: usize, seed: u64) -> (ChannelSet, PhaseProfile, BeamformerSet) {
        let mut cfg = SystemConfig::desk_default();
        cfg.k_users = k_users;
        let layout = SceneLayout::approximate_default(k_users);
        let ch = synthesize_channels(&cfg, &layout, &PathLossModel::default(), None, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 77);
        let v = PhaseProfile::random(cfg.n_irs, &mut rng);
        let bf = BeamformerSet {
            w_c: (0..k_users).map(|_| cn_vector(&mut rng, cfg.m_t)).collect(),
            w_s: cn_vector(&mut rng, cfg.m_t),
            w_n: cn_vector(&mut rng, cfg.m_t),
        };
        (ch, v, bf)
    }

    #[test]
    fn single_user_without_interference() {
        let (ch, v, mut bf) = setup(1, 3);
        bf.w_s.fill(C64::new(0.0, 0.0));
        bf.w_n.fill(C64::new(0.0, 0.0));
        let sigma = 1e-12;
        let g = sinr_scu(&ch, &v, &bf.covariance(), 0, sigma).unwrap();
        let h = ch.composite_scu(&v, 0).unwrap();
        let expected = (&h * &bf.w_c[0])[(0, 0)].norm_sqr() / sigma;
        assert!((g - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn no_signal_no_sinr() {
        let (ch, v, mut bf) = setup(2, 4);
        bf.w_c[1].fill(C64::new(0.0, 0.0));
        let cov = bf.covariance();
        assert_eq!(sinr_scu(&ch, &v, &cov, 1, 1e-12).unwrap(), 0.0);
        assert_eq!(sinr_eve(&ch, &v, &cov, 1, 1e-12).unwrap(), 0.0);
    }

    #[test]
    fn matches_term_by_term_quotient() {
        for seed in 0..20 {
            let (ch, v, bf) = setup(3, seed);
            let cov = bf.covariance();
            let sigma = 1e-12;
            for k in 0..3 {
                let h = ch.composite_scu(&v, k).unwrap();
                let term = |w: &crate::linalg::CVec| (&h * w)[(0, 0)].norm_sqr();
                let desired = term(&bf.w_c[k]);
                let iui: f64 = (0..3).filter(|&i| i != k).map(|i| term(&bf.w_c[i])).sum();
                let expected = desired / (iui + term(&bf.w_s) + term(&bf.w_n) + sigma);
                let got = sinr_scu(&ch, &v, &cov, k, sigma).unwrap();
                assert!((got - expected).abs() <= 1e-12 * expected);

                let he = ch.composite_eve(&v).unwrap();
                let te = |w: &crate::linalg::CVec| (&he * w)[(0, 0)].norm_sqr();
                let iue: f64 = (0..3).filter(|&i| i != k).map(|i| te(&bf.w_c[i])).sum();
                let expected_e = te(&bf.w_c[k]) / (iue + te(&bf.w_s) + te(&bf.w_n) + sigma);
                let got_e = sinr_eve(&ch, &v, &cov, k, sigma).unwrap();
                assert!((got_e - expected_e).abs() <= 1e-12 * expected_e);
            }
        }
    }

    #[test]
    fn artificial_noise_dominated_limit() {
        let (ch, v, mut bf) = setup(1, 6);
        bf.w_s.fill(C64::new(0.0, 0.0));
        let cov = bf.covariance();
        let he = ch.composite_eve(&v).unwrap();
        let limit = row_quad(&he, &cov.w_c[0]) / row_quad(&he, &cov.w_n);
        let g = sinr_eve(&ch, &v, &cov, 0, 1e-300).unwrap();
        assert!((g - limit).abs() <= 1e-12 * limit);
    }
}
