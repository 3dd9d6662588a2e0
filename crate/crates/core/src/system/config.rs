use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Array sizes, semantic block parameters, power budget and noise levels.
/// All powers are linear watts; dBm only appears in the scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub m_t: usize,
    pub m_r: usize,
    pub n_irs: usize,
    pub k_users: usize,
    /// Data-segment length.
    pub l_s: usize,
    /// Semantic symbols per segment.
    pub kappa: usize,
    pub bandwidth_hz: f64,
    /// Average semantic information per message, suts.
    pub i_sem: f64,
    pub p_max: f64,
    pub sigma_s2: f64,
    pub sigma_c2: f64,
    pub sigma_e2: f64,
    /// IRS element spacing over wavelength.
    pub spacing_ratio: f64,
}

impl SystemConfig {
    /// Semantic block length L = κ·L_s, also the radar dwell in symbols.
    pub fn block_length(&self) -> usize {
        self.kappa * self.l_s
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("m_t", self.m_t),
            ("m_r", self.m_r),
            ("n_irs", self.n_irs),
            ("k_users", self.k_users),
            ("l_s", self.l_s),
            ("kappa", self.kappa),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        let powers = [
            ("bandwidth_hz", self.bandwidth_hz),
            ("i_sem", self.i_sem),
            ("p_max", self.p_max),
            ("sigma_s2", self.sigma_s2),
            ("sigma_c2", self.sigma_c2),
            ("sigma_e2", self.sigma_e2),
            ("spacing_ratio", self.spacing_ratio),
        ];
        for (name, v) in powers {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }

    /// Desk-scale defaults: M_t = M_r = 4, N = 8, K = 2 with the remaining
    /// values at the reference operating point (L_s = 256, κ = 5, B = 5 MHz,
    /// I = 10 suts, P_max = 30 dBm, all noise −90 dBm, d/λ = 1/2).
    pub fn desk_default() -> Self {
        Self {
            m_t: 4,
            m_r: 4,
            n_irs: 8,
            k_users: 2,
            l_s: 256,
            kappa: 5,
            bandwidth_hz: 5e6,
            i_sem: 10.0,
            p_max: crate::linalg::dbm_to_watts(30.0),
            sigma_s2: crate::linalg::dbm_to_watts(-90.0),
            sigma_c2: crate::linalg::dbm_to_watts(-90.0),
            sigma_e2: crate::linalg::dbm_to_watts(-90.0),
            spacing_ratio: 0.5,
        }
    }

    pub fn with_sizes(mut self, m: usize, n: usize) -> Self {
        self.m_t = m;
        self.m_r = m;
        self.n_irs = n;
        self
    }
}

/// Distance-dependent path loss K0·(d/d0)^(−ζ) plus Rician factors of the
/// IRS-linked channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathLossModel {
    pub k0: f64,
    pub d0: f64,
    pub zeta_irs: f64,
    pub zeta_direct: f64,
    pub rician_beta_bi: f64,
    pub rician_beta_ic: f64,
    pub rician_beta_ie: f64,
}

impl Default for PathLossModel {
    fn default() -> Self {
        Self {
            k0: 1e-3,
            d0: 1.0,
            zeta_irs: 2.5,
            zeta_direct: 3.5,
            rician_beta_bi: 0.5,
            rician_beta_ic: 0.5,
            rician_beta_ie: 0.5,
        }
    }
}

impl PathLossModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.k0 > 0.0 && self.d0 > 0.0) {
            return Err(Error::Config("k0 and d0 must be positive".into()));
        }
        if self.zeta_irs < 0.0 || self.zeta_direct < 0.0 {
            return Err(Error::Config("path-loss exponents must be non-negative".into()));
        }
        if self.rician_beta_bi < 0.0 || self.rician_beta_ic < 0.0 || self.rician_beta_ie < 0.0 {
            return Err(Error::Config("Rician factors must be non-negative".into()));
        }
        Ok(())
    }

    pub fn gain(&self, distance: f64, zeta: f64) -> Result<f64> {
        path_loss_gain(distance, zeta, self)
    }
}

/// K0·(d/d0)^(−ζ); undefined below the reference distance.
pub fn path_loss_gain(distance: f64, zeta: f64, model: &PathLossModel) -> Result<f64> {
    if !(distance >= model.d0) {
        return Err(Error::BelowReferenceDistance { distance, d0: model.d0 });
    }
    Ok(model.k0 * (distance / model.d0).powf(-zeta))
}

pub type Point = [f64; 2];

/// Planar node placement. Array axes are given in degrees from the x-axis;
/// angles of arrival/departure are measured from array broadside, so
/// sin θ is the projection of the unit direction onto the array axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneLayout {
    pub bs: Point,
    pub irs: Point,
    pub scus: Vec<Point>,
    pub eve: Point,
    pub mst: Point,
    pub irs_axis_deg: f64,
    pub bs_axis_deg: f64,
}

impl SceneLayout {
    /// Approximate placement (no published coordinates exist): BS at the
    /// origin, IRS at (50, 10), SCUs around (40, 0), EVE near (45, −5),
    /// MST near (60, 15).
    pub fn approximate_default(k_users: usize) -> Self {
        let scus = (0..k_users)
            .map(|k| {
                let offset = if k_users == 1 { 0.0 } else { -2.0 + 4.0 * k as f64 / (k_users - 1) as f64 };
                [40.0 + offset, -offset]
            })
            .collect();
        Self {
            bs: [0.0, 0.0],
            irs: [50.0, 10.0],
            scus,
            eve: [45.0, -5.0],
            mst: [60.0, 15.0],
            irs_axis_deg: 90.0,
            bs_axis_deg: 90.0,
        }
    }

    pub fn distance(a: Point, b: Point) -> f64 {
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
    }

    /// Angle from broadside of an array at `from` (axis in degrees) towards `to`.
    pub fn angle_from(from: Point, axis_deg: f64, to: Point) -> f64 {
        let d = Self::distance(from, to);
        let dir = [(to[0] - from[0]) / d, (to[1] - from[1]) / d];
        let axis = axis_deg.to_radians();
        let proj = dir[0] * axis.cos() + dir[1] * axis.sin();
        proj.clamp(-1.0, 1.0).asin()
    }

    /// Target DoA at the IRS.
    pub fn theta(&self) -> f64 {
        Self::angle_from(self.irs, self.irs_axis_deg, self.mst)
    }

    fn nodes(&self) -> Vec<(String, Point)> {
        let mut v = vec![("bs".to_string(), self.bs), ("irs".to_string(), self.irs)];
        for (k, p) in self.scus.iter().enumerate() {
            v.push((format!("scu{k}"), *p));
        }
        v.push(("eve".into(), self.eve));
        v.push(("mst".into(), self.mst));
        v
    }

    pub fn validate(&self, k_users: usize, d0: f64) -> Result<()> {
        if self.scus.len() != k_users {
            return Err(Error::Config(format!(
                "layout has {} SCU positions but k_users = {k_users}",
                self.scus.len()
            )));
        }
        let nodes = self.nodes();
        for i in 0..nodes.len() {
            for j in i + 1..nodes.len() {
                let d = Self::distance(nodes[i].1, nodes[j].1);
                if !(d > d0) {
                    return Err(Error::Config(format!(
                        "{} and {} are {d:.3} m apart, must exceed {d0} m",
                        nodes[i].0, nodes[j].0
                    )));
                }
            }
        }
        let theta = self.theta();
        if !(theta.abs() < std::f64::consts::FRAC_PI_2) {
            return Err(Error::Config(format!("target DoA {theta} rad lies on the IRS axis")));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_distance_gain() {
        let m = PathLossModel::default();
        assert!((path_loss_gain(1.0, 2.5, &m).unwrap() - 1e-3).abs() < 1e-18);
    }

    #[test]
    fn ten_meters() {
        let m = PathLossModel::default();
        let g = path_loss_gain(10.0, 2.5, &m).unwrap();
        assert!((g - 10f64.powf(-5.5)).abs() <= 1e-15 * g.max(1e-300) + 1e-20);
    }

    #[test]
    fn zero_exponent_is_flat() {
        let m = PathLossModel::default();
        for d in [1.0, 3.0, 1e4] {
            assert_eq!(path_loss_gain(d, 0.0, &m).unwrap(), m.k0);
        }
    }

    #[test]
    fn below_reference_rejected() {
        let m = PathLossModel::default();
        assert!(matches!(
            path_loss_gain(0.5, 2.0, &m),
            Err(Error::BelowReferenceDistance { .. })
        ));
    }

    #[test]
    fn default_layout_is_valid() {
        let l = SceneLayout::approximate_default(2);
        l.validate(2, 1.0).unwrap();
        let theta = l.theta();
        assert!(theta > 0.0 && theta < std::f64::consts::FRAC_PI_2);
    }

    #[test]
    fn block_length() {
        let c = SystemConfig::desk_default();
        assert_eq!(c.block_length(), 1280);
        c.validate().unwrap();
    }

    #[test]
    fn zero_counts_rejected() {
        let mut c = SystemConfig::desk_default();
        c.n_irs = 0;
        assert!(c.validate().is_err());
    }
}
