use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Bumped whenever a column is added, removed or changes meaning.
pub const SCHEMA_VERSION: u32 = 1;

/// Outcome class of one row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowStatus {
    Ok,
    /// No design meets the constraints.
    Infeasible,
    /// Numerical or configuration failure.
    Failed,
}

/// One (realization, sweep point, scheme) result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema_version: u32,
    pub config_hash: String,
    pub experiment: String,
    pub scheme: String,
    pub realization: usize,
    pub channel_seed: u64,
    pub m_t: usize,
    pub m_r: usize,
    pub n_irs: usize,
    pub k_users: usize,
    pub kappa: usize,
    pub p_max_dbm: f64,
    pub epsilon_suts_per_sec: f64,
    pub r_th_suts_per_sec: Option<f64>,
    pub crb_rad2: Option<f64>,
    pub crb_db: Option<f64>,
    pub ssr_suts_per_sec: Option<f64>,
    pub status: RowStatus,
    pub ao_status: Option<String>,
    pub ao_iterations: usize,
    pub gss_evaluations: usize,
    pub gss_fallback: bool,
    pub sdp_status: Option<String>,
    /// Set when a Pareto point reports the design of a stricter floor.
    pub design_from_epsilon: Option<f64>,
    pub error: Option<String>,
}

/// One AO iteration of a convergence run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub schema_version: u32,
    pub config_hash: String,
    pub case_m: usize,
    pub case_n: usize,
    pub realization: usize,
    pub iteration: usize,
    pub crb_rad2: f64,
    pub crb_db: f64,
}

/// One (realization, power, κ) point of the semantic-vs-bit comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BcRecord {
    pub schema_version: u32,
    pub config_hash: String,
    pub cqi_table_hash: String,
    pub realization: usize,
    pub channel_seed: u64,
    pub p_max_dbm: f64,
    pub kappa: usize,
    pub mu: f64,
    pub crb_target_db: Option<f64>,
    /// "absolute" or "relative" (best attainable plus margin).
    pub target_rule: String,
    pub epsilon_suts_per_sec: Option<f64>,
    pub crb_db: Option<f64>,
    pub ssr_suts_per_sec: Option<f64>,
    pub bsr_suts_per_sec: Option<f64>,
    pub status: RowStatus,
    pub error: Option<String>,
}

/// One oracle of the validation suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub name: String,
    pub observed: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

/// Wall time of one work unit. Kept out of the result CSVs so those stay
/// byte-identical across runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub unit: usize,
    pub label: String,
    pub wall_seconds: f64,
}

/// Median and quartiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

impl Quartiles {
    /// Linear-interpolation quantiles; None for an empty sample.
    pub fn of(values: &[f64]) -> Option<Self> {
        let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        Some(Self { q1: quantile(&v, 0.25), median: quantile(&v, 0.5), q3: quantile(&v, 0.75) })
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Aggregate over realizations for one (scheme, sweep point).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryGroup {
    pub scheme: String,
    pub sweep: String,
    pub x: f64,
    pub rows: usize,
    pub feasible: usize,
    pub failed: usize,
    pub crb_db: Option<Quartiles>,
    pub ssr_suts_per_sec: Option<Quartiles>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub experiment: String,
    pub config_hash: String,
    pub realizations: usize,
    pub master_seed: u64,
    pub groups: Vec<SummaryGroup>,
    pub notes: BTreeMap<String, f64>,
}

/// Group rows by (scheme, x) where `x` picks the sweep coordinate; groups
/// come out sorted by scheme then x.
pub fn summarize(records: &[RunRecord], sweep: &str, x: impl Fn(&RunRecord) -> f64) -> Vec<SummaryGroup> {
    let mut groups: BTreeMap<(String, u64), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        let key = x(r);
        groups.entry((r.scheme.clone(), ordered_bits(key))).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((scheme, bits), rows)| {
            let crb: Vec<f64> = rows.iter().filter_map(|r| r.crb_db).collect();
            let ssr: Vec<f64> = rows.iter().filter_map(|r| r.ssr_suts_per_sec).collect();
            SummaryGroup {
                scheme,
                sweep: sweep.to_string(),
                x: from_ordered_bits(bits),
                rows: rows.len(),
                feasible: rows.iter().filter(|r| r.status == RowStatus::Ok).count(),
                failed: rows.iter().filter(|r| r.status == RowStatus::Failed).count(),
                crb_db: Quartiles::of(&crb),
                ssr_suts_per_sec: Quartiles::of(&ssr),
            }
        })
        .collect()
}

// Order-preserving f64 ↔ u64 map so sweep values can key a BTreeMap.
fn ordered_bits(x: f64) -> u64 {
    let b = x.to_bits();
    if b >> 63 == 1 {
        !b
    } else {
        b | (1 << 63)
    }
}

fn from_ordered_bits(b: u64) -> f64 {
    f64::from_bits(if b >> 63 == 1 { b & !(1 << 63) } else { !b })
}

/// Result of any experiment: the rows of every table it fills plus the
/// aggregated summary.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunOutput {
    pub records: Vec<RunRecord>,
    pub traces: Vec<TraceRow>,
    pub bc: Vec<BcRecord>,
    pub oracles: Vec<OracleRow>,
    pub timings: Vec<TimingRow>,
    pub summary: Option<Summary>,
}

impl RunOutput {
    /// Fraction of rows that ended in a numerical or configuration failure.
    pub fn failure_rate(&self) -> f64 {
        let statuses: Vec<RowStatus> = self
            .records
            .iter()
            .map(|r| r.status)
            .chain(self.bc.iter().map(|r| r.status))
            .collect();
        if statuses.is_empty() {
            return 0.0;
        }
        statuses.iter().filter(|&&s| s == RowStatus::Failed).count() as f64 / statuses.len() as f64
    }

    pub fn oracles_passed(&self) -> bool {
        self.oracles.iter().all(|o| o.passed)
    }

    /// Write every non-empty table as `<stem>.csv` / `<stem>_<table>.csv`,
    /// the summary as `<stem>_summary.json` and timings as
    /// `<stem>_timing.csv`. Returns the written paths.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let mut put = |name: String, rows: &dyn Fn(&Path) -> Result<()>| -> Result<()> {
            let path = dir.join(name);
            rows(&path)?;
            written.push(path);
            Ok(())
        };
        if !self.records.is_empty() {
            put(format!("{stem}.csv"), &|p| write_csv(p, &self.records))?;
        }
        if !self.traces.is_empty() {
            put(format!("{stem}_trace.csv"), &|p| write_csv(p, &self.traces))?;
        }
        if !self.bc.is_empty() {
            put(format!("{stem}_bc.csv"), &|p| write_csv(p, &self.bc))?;
        }
        if !self.oracles.is_empty() {
            put(format!("{stem}_oracles.csv"), &|p| write_csv(p, &self.oracles))?;
        }
        if let Some(s) = &self.summary {
            put(format!("{stem}_summary.json"), &|p| {
                let mut text = serde_json::to_string_pretty(s)?;
                text.push('\n');
                std::fs::write(p, text)?;
                Ok(())
            })?;
        }
        if !self.timings.is_empty() {
            put(format!("{stem}_timing.csv"), &|p| write_csv(p, &self.timings))?;
        }
        Ok(written)
    }
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(true).from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Into::into)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quartiles_match_numpy_linear() {
        let q = Quartiles::of(&[7.0, 1.0, 3.0, 5.0]).unwrap();
        assert_eq!(q.median, 4.0);
        assert_eq!(q.q1, 2.5);
        assert_eq!(q.q3, 5.5);
        assert!(Quartiles::of(&[f64::INFINITY]).is_none());
    }

    #[test]
    fn ordered_bits_roundtrip() {
        let xs = [-3.5, -0.0, 0.0, 1e-300, 2.0, 70.0];
        for w in xs.windows(2) {
            assert!(ordered_bits(w[0]) <= ordered_bits(w[1]));
        }
        for x in xs {
            assert_eq!(from_ordered_bits(ordered_bits(x)).to_bits(), x.to_bits());
        }
    }
}
