use crate::error::{Error, Result};
use crate::linalg::{min_eigenvalue, outer, CMat, CVec};
use crate::tolerances::PSD_SLACK;

/// Per-stream transmit beamformers: one communication vector per SCU, a
/// dedicated sensing vector and an artificial-noise vector. Entries are in
/// √W.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerSet {
    pub w_c: Vec<CVec>,
    pub w_s: CVec,
    pub w_n: CVec,
}

impl BeamformerSet {
    pub fn zeros(m_t: usize, k_users: usize) -> Self {
        Self {
            w_c: vec![CVec::zeros(m_t); k_users],
            w_s: CVec::zeros(m_t),
            w_n: CVec::zeros(m_t),
        }
    }

    pub fn m_t(&self) -> usize {
        self.w_s.len()
    }

    pub fn total_power(&self) -> f64 {
        self.w_c.iter().map(|w| w.norm_squared()).sum::<f64>() + self.w_s.norm_squared() + self.w_n.norm_squared()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let f = crate::linalg::c(factor);
        Self {
            w_c: self.w_c.iter().map(|w| w * f).collect(),
            w_s: &self.w_s * f,
            w_n: &self.w_n * f,
        }
    }

    /// Multiply every beamformer by the same unit-modulus phase.
    pub fn rotated(&self, phase: f64) -> Self {
        let r = crate::linalg::C64::from_polar(1.0, phase);
        Self {
            w_c: self.w_c.iter().map(|w| w * r).collect(),
            w_s: &self.w_s * r,
            w_n: &self.w_n * r,
        }
    }

    pub fn covariance(&self) -> CovarianceSet {
        covariance_from_beamformers(self)
    }
}

/// Stream covariances W_c,k, W_s, W_n and their sum R_x (watts).
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceSet {
    pub w_c: Vec<CMat>,
    pub w_s: CMat,
    pub w_n: CMat,
    pub r_x: CMat,
}

impl CovarianceSet {
    pub fn from_blocks(w_c: Vec<CMat>, w_s: CMat, w_n: CMat) -> Result<Self> {
        let m = w_s.nrows();
        if w_n.shape() != (m, m) || w_s.ncols() != m || w_c.iter().any(|w| w.shape() != (m, m)) {
            return Err(Error::Dimension("covariance blocks must all be M_t×M_t".into()));
        }
        let mut r_x = &w_s + &w_n;
        for w in &w_c {
            r_x += w;
        }
        Ok(Self { w_c, w_s, w_n, r_x })
    }

    pub fn m_t(&self) -> usize {
        self.r_x.nrows()
    }

    pub fn k_users(&self) -> usize {
        self.w_c.len()
    }

    pub fn total_power(&self) -> f64 {
        self.r_x.trace().re
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            w_c: self.w_c.iter().map(|w| w.scale(factor)).collect(),
            w_s: self.w_s.scale(factor),
            w_n: self.w_n.scale(factor),
            r_x: self.r_x.scale(factor),
        }
    }

    /// Every block PSD within PSD_SLACK·trace.
    pub fn is_psd(&self) -> bool {
        self.blocks().all(|w| {
            let tr = w.trace().re.abs();
            min_eigenvalue(w) >= -PSD_SLACK * tr.max(f64::MIN_POSITIVE)
        })
    }

    pub fn blocks(&self) -> impl Iterator<Item = &CMat> {
        self.w_c.iter().chain([&self.w_s, &self.w_n])
    }
}

/// W = w w† for every stream, R_x their sum; every block has rank ≤ 1.
pub fn covariance_from_beamformers(bf: &BeamformerSet) -> CovarianceSet {
    let w_c: Vec<CMat> = bf.w_c.iter().map(outer).collect();
    let w_s = outer(&bf.w_s);
    let w_n = outer(&bf.w_n);
    CovarianceSet::from_blocks(w_c, w_s, w_n).expect("beamformers share one dimension")
}
