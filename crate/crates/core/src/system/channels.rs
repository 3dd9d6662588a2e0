use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{PathLossModel, SceneLayout, SystemConfig};
use super::steering::steering_vector;
use crate::error::{Error, Result};
use crate::linalg::{c, cn_matrix, cn_vector, CMat, CVec, C64};
use crate::metrics::PhaseProfile;

/// Target angle at the IRS and complex round-trip echo coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensingScene {
    pub theta: f64,
    pub alpha: C64,
}

impl SensingScene {
    pub fn alpha_re(&self) -> f64 {
        self.alpha.re
    }

    pub fn alpha_im(&self) -> f64 {
        self.alpha.im
    }
}

/// Every channel of one realization. `g_t` is N×M_t (BS→IRS), `g_r` is
/// M_r×N (IRS→BS); per-user and eavesdropper vectors follow the
/// conjugate-row convention ĥ = h_c†ΦG_t + h_d†.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub g_t: CMat,
    pub g_r: CMat,
    pub h_d: Vec<CVec>,
    pub h_c: Vec<CVec>,
    pub h_e: CVec,
    pub g_e: CVec,
    pub scene: SensingScene,
    pub spacing_ratio: f64,
}

impl ChannelSet {
    pub fn m_t(&self) -> usize {
        self.g_t.ncols()
    }

    pub fn m_r(&self) -> usize {
        self.g_r.nrows()
    }

    pub fn n_irs(&self) -> usize {
        self.g_t.nrows()
    }

    pub fn k_users(&self) -> usize {
        self.h_d.len()
    }

    pub fn check_dims(&self, cfg: &SystemConfig) -> Result<()> {
        let ok = self.g_t.shape() == (cfg.n_irs, cfg.m_t)
            && self.g_r.shape() == (cfg.m_r, cfg.n_irs)
            && self.h_d.len() == cfg.k_users
            && self.h_c.len() == cfg.k_users
            && self.h_d.iter().all(|h| h.len() == cfg.m_t)
            && self.h_c.iter().all(|h| h.len() == cfg.n_irs)
            && self.h_e.len() == cfg.m_t
            && self.g_e.len() == cfg.n_irs;
        if ok {
            Ok(())
        } else {
            Err(Error::Dimension("channel set does not match the system configuration".into()))
        }
    }

    fn check_phase(&self, v: &PhaseProfile) -> Result<()> {
        if v.len() != self.n_irs() {
            return Err(Error::Dimension(format!(
                "phase profile has {} entries, IRS has {}",
                v.len(),
                self.n_irs()
            )));
        }
        Ok(())
    }

    /// ĥ_Bc,k = h_c,k†·diag(v)·G_t + h_d,k† (1×M_t).
    pub fn composite_scu(&self, v: &PhaseProfile, k: usize) -> Result<CMat> {
        if k >= self.k_users() {
            return Err(Error::Index { index: k, len: self.k_users() });
        }
        self.check_phase(v)?;
        Ok(composite(&self.h_c[k], &self.h_d[k], &self.g_t, v.v()))
    }

    /// ĥ_Be = g_e†·diag(v)·G_t + h_e† (1×M_t).
    pub fn composite_eve(&self, v: &PhaseProfile) -> Result<CMat> {
        self.check_phase(v)?;
        Ok(composite(&self.g_e, &self.h_e, &self.g_t, v.v()))
    }

    /// Ĝ_c,k = [G̃_c,k†, h_d,k]ᵀ with G̃_c,k = diag(h_c,k†)G_t, so that
    /// ĥ_Bc,k* = ṽ†Ĝ_c,k. Size (N+1)×M_t.
    pub fn lifted_scu(&self, k: usize) -> Result<CMat> {
        if k >= self.k_users() {
            return Err(Error::Index { index: k, len: self.k_users() });
        }
        Ok(lifted(&self.h_c[k], &self.h_d[k], &self.g_t))
    }

    pub fn lifted_eve(&self) -> CMat {
        lifted(&self.g_e, &self.h_e, &self.g_t)
    }
}

fn composite(h_irs: &CVec, h_direct: &CVec, g_t: &CMat, v: &CVec) -> CMat {
    let m_t = g_t.ncols();
    let mut row = CMat::zeros(1, m_t);
    for col in 0..m_t {
        let mut acc = h_direct[col].conj();
        for n in 0..g_t.nrows() {
            acc += h_irs[n].conj() * v[n] * g_t[(n, col)];
        }
        row[(0, col)] = acc;
    }
    row
}

fn lifted(h_irs: &CVec, h_direct: &CVec, g_t: &CMat) -> CMat {
    let (n, m_t) = g_t.shape();
    CMat::from_fn(n + 1, m_t, |i, j| {
        if i < n {
            // conj(G̃)[i, j] = h_irs[i] · conj(G_t[i, j])
            h_irs[i] * g_t[(i, j)].conj()
        } else {
            h_direct[j]
        }
    })
}

/// Line-of-sight parts of the IRS-linked channels, each already multiplied
/// by √(path-loss gain) but not by the Rician weight.
#[derive(Debug, Clone)]
pub struct LosComponents {
    pub g_t: CMat,
    pub g_r: CMat,
    pub h_c: Vec<CVec>,
    pub g_e: CVec,
}

struct Geometry {
    pl_bi: f64,
    pl_ic: Vec<f64>,
    pl_ie: f64,
    pl_bd: Vec<f64>,
    pl_be: f64,
    pl_im: f64,
    los: LosComponents,
}

fn geometry(cfg: &SystemConfig, layout: &SceneLayout, pl: &PathLossModel) -> Result<Geometry> {
    let s = cfg.spacing_ratio;
    let d_bi = SceneLayout::distance(layout.bs, layout.irs);
    let pl_bi = pl.gain(d_bi, pl.zeta_irs)?;
    let pl_ie = pl.gain(SceneLayout::distance(layout.irs, layout.eve), pl.zeta_irs)?;
    let pl_im = pl.gain(SceneLayout::distance(layout.irs, layout.mst), pl.zeta_irs)?;
    let pl_be = pl.gain(SceneLayout::distance(layout.bs, layout.eve), pl.zeta_direct)?;
    let pl_ic = layout
        .scus
        .iter()
        .map(|&p| pl.gain(SceneLayout::distance(layout.irs, p), pl.zeta_irs))
        .collect::<Result<Vec<_>>>()?;
    let pl_bd = layout
        .scus
        .iter()
        .map(|&p| pl.gain(SceneLayout::distance(layout.bs, p), pl.zeta_direct))
        .collect::<Result<Vec<_>>>()?;

    // BS→IRS departure at the BS array, arrival at the IRS array.
    let th_bs = SceneLayout::angle_from(layout.bs, layout.bs_axis_deg, layout.irs);
    let th_irs_bs = SceneLayout::angle_from(layout.irs, layout.irs_axis_deg, layout.bs);
    let a_irs_bs = steering_vector(th_irs_bs, cfg.n_irs, s);
    let a_bs_t = steering_vector(th_bs, cfg.m_t, 0.5);
    let a_bs_r = steering_vector(th_bs, cfg.m_r, 0.5);
    let sq = pl_bi.sqrt();
    let g_t = (&a_irs_bs * a_bs_t.transpose()).map(|z| z * sq);
    let g_r = (&a_bs_r * a_irs_bs.transpose()).map(|z| z * sq);
    let h_c = layout
        .scus
        .iter()
        .zip(&pl_ic)
        .map(|(&p, &g)| {
            let th = SceneLayout::angle_from(layout.irs, layout.irs_axis_deg, p);
            steering_vector(th, cfg.n_irs, s).map(|z| z.conj() * g.sqrt())
        })
        .collect();
    let th_e = SceneLayout::angle_from(layout.irs, layout.irs_axis_deg, layout.eve);
    let g_e = steering_vector(th_e, cfg.n_irs, s).map(|z| z.conj() * pl_ie.sqrt());

    Ok(Geometry {
        pl_bi,
        pl_ic,
        pl_ie,
        pl_bd,
        pl_be,
        pl_im,
        los: LosComponents { g_t, g_r, h_c, g_e },
    })
}

pub fn los_components(cfg: &SystemConfig, layout: &SceneLayout, pl: &PathLossModel) -> Result<LosComponents> {
    Ok(geometry(cfg, layout, pl)?.los)
}

/// Gain of the direct BS→SCU_k link, used by the variance checks.
pub fn direct_link_gain(layout: &SceneLayout, pl: &PathLossModel, k: usize) -> Result<f64> {
    let p = *layout.scus.get(k).ok_or(Error::Index { index: k, len: layout.scus.len() })?;
    pl.gain(SceneLayout::distance(layout.bs, p), pl.zeta_direct)
}

/// Default echo coefficient: √(IRS→MST gain · MST→IRS gain) with unit RCS
/// and the given phase.
pub fn default_alpha(layout: &SceneLayout, pl: &PathLossModel, phase: f64) -> Result<C64> {
    let g = pl.gain(SceneLayout::distance(layout.irs, layout.mst), pl.zeta_irs)?;
    Ok(C64::from_polar(g, phase))
}

/// Draw one channel realization. IRS-linked channels are Rician with the
/// configured factors, direct links Rayleigh, all scaled by √(path-loss
/// gain). Identical inputs give bit-identical output. With M_t = M_r the
/// receive channel is the transpose of the transmit channel. `alpha`
/// overrides the default echo coefficient.
pub fn synthesize_channels(
    cfg: &SystemConfig,
    layout: &SceneLayout,
    pl: &PathLossModel,
    alpha: Option<C64>,
    seed: u64,
) -> Result<ChannelSet> {
    cfg.validate()?;
    pl.validate()?;
    layout.validate(cfg.k_users, pl.d0)?;
    let geo = geometry(cfg, layout, pl)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let rician = |beta: f64| -> (f64, f64) {
        if beta.is_infinite() {
            (1.0, 0.0)
        } else {
            ((beta / (1.0 + beta)).sqrt(), (1.0 / (1.0 + beta)).sqrt())
        }
    };

    let (wl, wn) = rician(pl.rician_beta_bi);
    let nlos_t = cn_matrix(&mut rng, cfg.n_irs, cfg.m_t);
    let g_t = geo.los.g_t.map(|z| z * wl) + nlos_t.map(|z| z * wn * geo.pl_bi.sqrt());
    let g_r = if cfg.m_t == cfg.m_r {
        g_t.transpose()
    } else {
        let nlos_r = cn_matrix(&mut rng, cfg.m_r, cfg.n_irs);
        geo.los.g_r.map(|z| z * wl) + nlos_r.map(|z| z * wn * geo.pl_bi.sqrt())
    };

    let (cl, cn) = rician(pl.rician_beta_ic);
    let mut h_c = Vec::with_capacity(cfg.k_users);
    for k in 0..cfg.k_users {
        let nlos = cn_vector(&mut rng, cfg.n_irs);
        h_c.push(geo.los.h_c[k].map(|z| z * cl) + nlos.map(|z| z * cn * geo.pl_ic[k].sqrt()));
    }
    let (el, en) = rician(pl.rician_beta_ie);
    let nlos_e = cn_vector(&mut rng, cfg.n_irs);
    let g_e = geo.los.g_e.map(|z| z * el) + nlos_e.map(|z| z * en * geo.pl_ie.sqrt());

    let mut h_d = Vec::with_capacity(cfg.k_users);
    for k in 0..cfg.k_users {
        h_d.push(cn_vector(&mut rng, cfg.m_t).map(|z| z * geo.pl_bd[k].sqrt()));
    }
    let h_e = cn_vector(&mut rng, cfg.m_t).map(|z| z * geo.pl_be.sqrt());

    let alpha = alpha.unwrap_or_else(|| c(geo.pl_im));
    let set = ChannelSet {
        g_t,
        g_r,
        h_d,
        h_c,
        h_e,
        g_e,
        scene: SensingScene { theta: layout.theta(), alpha },
        spacing_ratio: cfg.spacing_ratio,
    };
    set.check_dims(cfg)?;
    Ok(set)
}
