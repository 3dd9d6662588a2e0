use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Bit-oriented comparison model: source compression factor μ and a CQI
/// table mapping SNR thresholds (dB) to spectral efficiency (bits/symbol).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BcModel {
    pub mu: f64,
    pub cqi_table: Vec<(f64, f64)>,
}

/// LTE 4-bit CQI efficiencies with commonly quoted BLER-10% SNR switching
/// points. A documented stand-in, not a normative table.
pub const DEFAULT_CQI_TABLE: [(f64, f64); 15] = [
    (-6.7, 0.1523),
    (-4.7, 0.2344),
    (-2.3, 0.3770),
    (0.2, 0.6016),
    (2.4, 0.8770),
    (4.3, 1.1758),
    (5.9, 1.4766),
    (8.1, 1.9141),
    (10.3, 2.4063),
    (11.7, 2.7305),
    (14.1, 3.3223),
    (16.3, 3.9023),
    (18.7, 4.5234),
    (21.0, 5.1152),
    (22.7, 5.5547),
];

impl BcModel {
    pub fn new(mu: f64, cqi_table: Vec<(f64, f64)>) -> Result<Self> {
        let m = Self { mu, cqi_table };
        m.validate()?;
        Ok(m)
    }

    pub fn with_default_table(mu: f64) -> Self {
        Self { mu, cqi_table: DEFAULT_CQI_TABLE.to_vec() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0) {
            return Err(Error::Config("compression factor μ must be positive".into()));
        }
        if self.cqi_table.is_empty() {
            return Err(Error::Config("CQI table is empty".into()));
        }
        for w in self.cqi_table.windows(2) {
            if !(w[1].0 > w[0].0 && w[1].1 > w[0].1) {
                return Err(Error::Config("CQI thresholds and efficiencies must be strictly increasing".into()));
            }
        }
        Ok(())
    }

    /// Rows `threshold_db,efficiency`; a non-numeric first line is taken as a header.
    pub fn parse_table(text: &str) -> Result<Vec<(f64, f64)>> {
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split(',').map(str::trim);
            let (a, b) = (parts.next(), parts.next());
            let parsed = match (a.map(str::parse::<f64>), b.map(str::parse::<f64>)) {
                (Some(Ok(t)), Some(Ok(e))) => Some((t, e)),
                _ => None,
            };
            match parsed {
                Some(row) => rows.push(row),
                None if rows.is_empty() && i == 0 => continue,
                None => return Err(Error::Config(format!("CQI table line {}: expected `threshold_db,efficiency`", i + 1))),
            }
        }
        Ok(rows)
    }

    pub fn load_table(path: &Path) -> Result<Vec<(f64, f64)>> {
        Self::parse_table(&std::fs::read_to_string(path)?)
    }

    /// Spectral efficiency R(γ): the entry with the highest threshold not
    /// above 10·log10 γ, zero below the first threshold.
    pub fn efficiency(&self, gamma: f64) -> f64 {
        if !(gamma > 0.0) {
            return 0.0;
        }
        let snr_db = 10.0 * gamma.log10();
        self.cqi_table
            .iter()
            .take_while(|(t, _)| *t <= snr_db)
            .last()
            .map_or(0.0, |&(_, e)| e)
    }

    /// Short hash identifying the threshold table in output files.
    pub fn table_hash(&self) -> String {
        let mut h = Sha256::new();
        for (t, e) in &self.cqi_table {
            h.update(format!("{t:.6},{e:.6}\n"));
        }
        hex::encode(&h.finalize()[..6])
    }
}

/// Equivalent bit-oriented rate (B·I/(μ·L_s))·R(γ), suts/sec.
pub fn bc_rate(bc: &BcModel, bandwidth_hz: f64, i_sem: f64, l_s: usize, gamma: f64) -> f64 {
    bandwidth_hz * i_sem / (bc.mu * l_s as f64) * bc.efficiency(gamma)
}

/// Worst-case [BR_com − BR_eve]⁺ over users.
pub fn bc_secrecy(bc: &BcModel, bandwidth_hz: f64, i_sem: f64, l_s: usize, sinrs: &[(f64, f64)]) -> f64 {
    sinrs
        .iter()
        .map(|&(gc, ge)| (bc_rate(bc, bandwidth_hz, i_sem, l_s, gc) - bc_rate(bc, bandwidth_hz, i_sem, l_s, ge)).max(0.0))
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> BcModel {
        BcModel::with_default_table(20.0)
    }

    #[test]
    fn below_table_is_zero() {
        assert_eq!(bc_rate(&model(), 5e6, 10.0, 256, 10f64.powf(-0.8)), 0.0);
    }

    #[test]
    fn above_table_is_top_efficiency() {
        let r = bc_rate(&model(), 5e6, 10.0, 256, 1e6);
        assert!((r - 5e6 * 10.0 / (20.0 * 256.0) * 5.5547).abs() < 1e-9);
    }

    #[test]
    fn step_monotone_over_sweep() {
        let m = model();
        let mut prev = 0.0;
        let mut steps = 0;
        for i in 0..=6000 {
            let db = -20.0 + 0.01 * i as f64;
            let r = bc_rate(&m, 5e6, 10.0, 256, 10f64.powf(db / 10.0));
            assert!(r >= prev);
            if r > prev {
                steps += 1;
            }
            prev = r;
        }
        assert_eq!(steps, m.cqi_table.len());
    }

    #[test]
    fn secrecy_cases() {
        let m = model();
        assert_eq!(bc_secrecy(&m, 5e6, 10.0, 256, &[(50.0, 50.0)]), 0.0);
        let com = bc_rate(&m, 5e6, 10.0, 256, 50.0);
        assert_eq!(bc_secrecy(&m, 5e6, 10.0, 256, &[(50.0, 0.01)]), com);
    }

    #[test]
    fn table_parsing() {
        let rows = BcModel::parse_table("threshold_db,efficiency\n-6.7,0.15\n0.2, 0.60\n").unwrap();
        assert_eq!(rows, vec![(-6.7, 0.15), (0.2, 0.60)]);
        assert!(BcModel::new(1.0, vec![(1.0, 1.0), (0.0, 2.0)]).is_err());
        assert!(BcModel::parse_table("1,2\nfoo,bar\n").is_err());
    }
}
