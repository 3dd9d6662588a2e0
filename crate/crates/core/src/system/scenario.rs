use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{PathLossModel, Point, SceneLayout, SystemConfig};
use crate::conic::SolverSettings;
use crate::error::{Error, Result};
use crate::linalg::{dbm_to_watts, from_db, C64};
use crate::metrics::{BcModel, SemanticModel};

/// `[system]` section. Powers in dBm; `noise_dbm` sets all three receivers
/// unless a per-receiver value is given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemSection {
    pub m_t: usize,
    pub m_r: usize,
    pub n_irs: usize,
    pub k_users: usize,
    pub l_s: usize,
    pub kappa: usize,
    pub bandwidth_hz: f64,
    pub i_sem: f64,
    pub p_max_dbm: f64,
    pub noise_dbm: f64,
    pub sigma_s_dbm: Option<f64>,
    pub sigma_c_dbm: Option<f64>,
    pub sigma_e_dbm: Option<f64>,
    pub d_irs_over_lambda: f64,
}

impl Default for SystemSection {
    fn default() -> Self {
        Self {
            m_t: 4,
            m_r: 4,
            n_irs: 8,
            k_users: 2,
            l_s: 256,
            kappa: 5,
            bandwidth_hz: 5e6,
            i_sem: 10.0,
            p_max_dbm: 30.0,
            noise_dbm: -90.0,
            sigma_s_dbm: None,
            sigma_c_dbm: None,
            sigma_e_dbm: None,
            d_irs_over_lambda: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathLossSection {
    pub k0_db: f64,
    pub d0: f64,
    pub zeta_irs: f64,
    pub zeta_direct: f64,
    pub rician_beta_bi: f64,
    pub rician_beta_ic: f64,
    pub rician_beta_ie: f64,
}

impl Default for PathLossSection {
    fn default() -> Self {
        Self {
            k0_db: -30.0,
            d0: 1.0,
            zeta_irs: 2.5,
            zeta_direct: 3.5,
            rician_beta_bi: 0.5,
            rician_beta_ic: 0.5,
            rician_beta_ie: 0.5,
        }
    }
}

/// `[layout]` section; omitted fields come from the approximate default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayoutSection {
    pub bs: Option<Point>,
    pub irs: Option<Point>,
    pub scus: Option<Vec<Point>>,
    pub eve: Option<Point>,
    pub mst: Option<Point>,
    pub irs_axis_deg: Option<f64>,
    pub bs_axis_deg: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SemanticSection {
    pub a1: f64,
    pub a2: f64,
    pub c1: f64,
    pub c2: f64,
}

impl Default for SemanticSection {
    fn default() -> Self {
        let m = SemanticModel::reference();
        Self { a1: m.a1, a2: m.a2, c1: m.c1, c2: m.c2 }
    }
}

/// `[bc]` section: compression factor and an optional CQI table file
/// (rows `threshold_db,efficiency`, relative to the scenario file).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BcSection {
    pub mu: f64,
    pub cqi_table: Option<String>,
}

impl Default for BcSection {
    fn default() -> Self {
        Self { mu: 20.0, cqi_table: None }
    }
}

/// `[echo]` section. Without an explicit coefficient the default
/// magnitude (round-trip IRS–MST gain, unit RCS) is used with `phase_rad`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EchoSection {
    pub alpha_re: Option<f64>,
    pub alpha_im: Option<f64>,
    pub phase_rad: f64,
}

/// On-disk scenario description (TOML).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioFile {
    pub system: SystemSection,
    pub pathloss: PathLossSection,
    pub layout: LayoutSection,
    pub semantic: SemanticSection,
    pub bc: BcSection,
    pub echo: EchoSection,
    pub solver: SolverSettings,
}

impl ScenarioFile {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Scenario> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)?.resolve(path.parent())
    }

    /// Convert to linear units and validate. `base_dir` anchors relative
    /// CQI table paths.
    pub fn resolve(&self, base_dir: Option<&Path>) -> Result<Scenario> {
        let s = &self.system;
        let noise = |v: Option<f64>| dbm_to_watts(v.unwrap_or(s.noise_dbm));
        let system = SystemConfig {
            m_t: s.m_t,
            m_r: s.m_r,
            n_irs: s.n_irs,
            k_users: s.k_users,
            l_s: s.l_s,
            kappa: s.kappa,
            bandwidth_hz: s.bandwidth_hz,
            i_sem: s.i_sem,
            p_max: dbm_to_watts(s.p_max_dbm),
            sigma_s2: noise(s.sigma_s_dbm),
            sigma_c2: noise(s.sigma_c_dbm),
            sigma_e2: noise(s.sigma_e_dbm),
            spacing_ratio: s.d_irs_over_lambda,
        };
        system.validate()?;

        let p = &self.pathloss;
        let pathloss = PathLossModel {
            k0: from_db(p.k0_db),
            d0: p.d0,
            zeta_irs: p.zeta_irs,
            zeta_direct: p.zeta_direct,
            rician_beta_bi: p.rician_beta_bi,
            rician_beta_ic: p.rician_beta_ic,
            rician_beta_ie: p.rician_beta_ie,
        };
        pathloss.validate()?;

        let d = SceneLayout::approximate_default(s.k_users);
        let l = &self.layout;
        let layout = SceneLayout {
            bs: l.bs.unwrap_or(d.bs),
            irs: l.irs.unwrap_or(d.irs),
            scus: l.scus.clone().unwrap_or(d.scus),
            eve: l.eve.unwrap_or(d.eve),
            mst: l.mst.unwrap_or(d.mst),
            irs_axis_deg: l.irs_axis_deg.unwrap_or(d.irs_axis_deg),
            bs_axis_deg: l.bs_axis_deg.unwrap_or(d.bs_axis_deg),
        };
        layout.validate(system.k_users, pathloss.d0)?;

        let semantic = SemanticModel {
            a1: self.semantic.a1,
            a2: self.semantic.a2,
            c1: self.semantic.c1,
            c2: self.semantic.c2,
            kappa: s.kappa,
            l_s: s.l_s,
            bandwidth_hz: s.bandwidth_hz,
            i_sem: s.i_sem,
        };
        semantic.validate()?;

        let table = match &self.bc.cqi_table {
            Some(path) => {
                let p = Path::new(path);
                let full = match base_dir {
                    Some(base) if p.is_relative() => base.join(p),
                    _ => p.to_path_buf(),
                };
                BcModel::load_table(&full)?
            }
            None => crate::metrics::DEFAULT_CQI_TABLE.to_vec(),
        };
        let bc = BcModel::new(self.bc.mu, table)?;

        let alpha = match (self.echo.alpha_re, self.echo.alpha_im) {
            (None, None) => None,
            (re, im) => {
                let a = C64::new(re.unwrap_or(0.0), im.unwrap_or(0.0));
                if a.norm() == 0.0 {
                    return Err(Error::Config("echo coefficient must be non-zero".into()));
                }
                Some(a)
            }
        };
        let alpha = match alpha {
            Some(a) => a,
            None => super::channels::default_alpha(&layout, &pathloss, self.echo.phase_rad)?,
        };

        self.solver.validate()?;
        Ok(Scenario {
            system,
            layout,
            pathloss,
            semantic,
            bc,
            alpha,
            solver: self.solver.clone(),
            hash: self.hash()?,
        })
    }

    /// Short content hash of the canonical serialization.
    pub fn hash(&self) -> Result<String> {
        let canonical = serde_json::to_string(self)?;
        Ok(hex::encode(&Sha256::digest(canonical.as_bytes())[..8]))
    }
}

/// A validated scenario in linear units.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub system: SystemConfig,
    pub layout: SceneLayout,
    pub pathloss: PathLossModel,
    pub semantic: SemanticModel,
    pub bc: BcModel,
    pub alpha: C64,
    pub solver: SolverSettings,
    /// Hash of the scenario file contents that produced this value.
    pub hash: String,
}

impl Scenario {
    pub fn desk_default() -> Self {
        ScenarioFile::default().resolve(None).expect("built-in scenario is valid")
    }

    pub fn channels(&self, seed: u64) -> Result<super::ChannelSet> {
        super::synthesize_channels(&self.system, &self.layout, &self.pathloss, Some(self.alpha), seed)
    }

    pub fn noise(&self) -> crate::metrics::NoisePowers {
        crate::metrics::NoisePowers::from_config(&self.system)
    }
}
