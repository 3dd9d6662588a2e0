use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::optimizer::{default_eps_grid, Scheme};
use crate::system::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Pareto,
    Converge,
    PowerSweep,
    ElementsSweep,
    BcCompare,
    Validate,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::Pareto,
        ExperimentKind::Converge,
        ExperimentKind::PowerSweep,
        ExperimentKind::ElementsSweep,
        ExperimentKind::BcCompare,
        ExperimentKind::Validate,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::Pareto => "pareto",
            ExperimentKind::Converge => "converge",
            ExperimentKind::PowerSweep => "power-sweep",
            ExperimentKind::ElementsSweep => "elements-sweep",
            ExperimentKind::BcCompare => "bc-compare",
            ExperimentKind::Validate => "validate",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment `{s}`")))
    }
}

/// Everything that determines the bytes of an experiment's output.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub scenario: Scenario,
    pub realizations: usize,
    pub master_seed: u64,
    pub schemes: Vec<Scheme>,
    /// SSR floors for Pareto and bc-compare runs, suts/sec.
    pub eps_grid: Vec<f64>,
    /// SSR floor of the power, elements and convergence runs, suts/sec.
    pub epsilon: f64,
    /// Power sweep and bc-compare x-axis.
    pub p_max_dbm: Vec<f64>,
    pub n_list: Vec<usize>,
    pub elements_p_max_dbm: f64,
    /// (M, N) pairs with M_t = M_r = M.
    pub cases: Vec<(usize, usize)>,
    pub kappas: Vec<usize>,
    pub crb_target_db: f64,
    /// When the absolute target is out of reach, the target becomes the
    /// best attainable CRB plus this many dB.
    pub crb_margin_db: f64,
    /// Worker threads; 0 keeps the global pool.
    pub threads: usize,
}

impl ExperimentSpec {
    pub const DEFAULT_REALIZATIONS: usize = 20;
    pub const DEFAULT_EPS_POINTS: usize = 12;

    pub fn new(kind: ExperimentKind, scenario: Scenario) -> Self {
        let eps_grid = default_eps_grid(&scenario.semantic, Self::DEFAULT_EPS_POINTS);
        Self {
            kind,
            scenario,
            realizations: Self::DEFAULT_REALIZATIONS,
            master_seed: 1,
            schemes: Scheme::ALL.to_vec(),
            eps_grid,
            epsilon: 1e4,
            p_max_dbm: vec![30.0, 40.0, 50.0, 60.0, 70.0],
            n_list: vec![4, 8, 16, 32],
            elements_p_max_dbm: 50.0,
            cases: vec![(6, 8), (8, 8), (6, 10), (8, 10)],
            kappas: vec![2, 5, 8],
            crb_target_db: -150.0,
            crb_margin_db: 3.0,
            threads: 0,
        }
    }

    pub fn with_eps_points(mut self, points: usize) -> Self {
        self.eps_grid = default_eps_grid(&self.scenario.semantic, points);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if self.realizations == 0 {
            return fail("realization count must be at least 1");
        }
        let ceiling = self.scenario.semantic.ssr_ceiling();
        match self.kind {
            ExperimentKind::Pareto | ExperimentKind::BcCompare if self.eps_grid.is_empty() => {
                return fail("ε grid is empty");
            }
            ExperimentKind::Pareto | ExperimentKind::PowerSweep | ExperimentKind::ElementsSweep if self.schemes.is_empty() => {
                return fail("scheme list is empty");
            }
            ExperimentKind::PowerSweep | ExperimentKind::BcCompare if self.p_max_dbm.is_empty() => {
                return fail("P_max list is empty");
            }
            ExperimentKind::ElementsSweep if self.n_list.is_empty() || self.n_list.contains(&0) => {
                return fail("N list must be non-empty with N ≥ 1");
            }
            ExperimentKind::Converge if self.cases.is_empty() || self.cases.iter().any(|&(m, n)| m == 0 || n == 0) => {
                return fail("convergence cases must be non-empty with M, N ≥ 1");
            }
            ExperimentKind::BcCompare if self.kappas.is_empty() || self.kappas.contains(&0) => {
                return fail("κ list must be non-empty with κ ≥ 1");
            }
            _ => {}
        }
        if self.eps_grid.iter().any(|&e| !(0.0..ceiling).contains(&e)) {
            return Err(Error::Config(format!("ε values must lie in [0, {ceiling})")));
        }
        if !(0.0..ceiling).contains(&self.epsilon) {
            return Err(Error::Config(format!("ε = {} must lie in [0, {ceiling})", self.epsilon)));
        }
        if self.p_max_dbm.iter().chain([&self.elements_p_max_dbm]).any(|p| !p.is_finite()) {
            return fail("P_max values must be finite");
        }
        if !self.crb_margin_db.is_finite() || self.crb_margin_db < 0.0 {
            return fail("CRB margin must be non-negative");
        }
        Ok(())
    }

    /// Content hash of the scenario plus every sweep setting; stamped on
    /// each output row.
    pub fn config_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.scenario.hash.as_bytes());
        h.update(self.scenario.bc.table_hash().as_bytes());
        let text = format!(
            "{}|{}|{}|{:?}|{:?}|{}|{:?}|{:?}|{}|{:?}|{:?}|{}|{}",
            self.kind,
            self.realizations,
            self.master_seed,
            self.schemes,
            self.eps_grid,
            self.epsilon,
            self.p_max_dbm,
            self.n_list,
            self.elements_p_max_dbm,
            self.cases,
            self.kappas,
            self.crb_target_db,
            self.crb_margin_db,
        );
        h.update(text.as_bytes());
        hex::encode(&h.finalize()[..8])
    }
}
