//! Small dense semidefinite programs over complex Hermitian variables, a
//! conic backend, and Gaussian-randomization rank-one recovery.

mod backend;
mod dump;
mod problem;
mod randomize;

use serde::{Deserialize, Serialize};

pub use backend::solve_sdp;
pub use dump::dump_text;
pub use problem::{CLinExpr, Constraint, HermVar, LinExpr, Objective, Relation, SdpProblem, SdpSolution};
pub use randomize::{
    randomize_rank_one_v, randomize_rank_one_w, validate_feasibility, BeamConstraintSet, GrmOutcome,
    PhaseConstraintSet, ViolationReport,
};

/// Outcome of a conic solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Inaccurate,
    Failed,
}

impl SolveStatus {
    /// Optimal or reduced-accuracy solutions both carry a usable iterate.
    pub fn is_usable(self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::Inaccurate)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Inaccurate => "inaccurate",
            SolveStatus::Failed => "failed",
        }
    }
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Tunables for the conic backend and for the algorithms built on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSettings {
    /// Primal/dual feasibility tolerance handed to the interior-point engine.
    pub feas_tol: f64,
    /// Relative and absolute duality-gap tolerance.
    pub gap_tol: f64,
    pub max_iter: u32,
    /// Accepted residual of an "optimal" solution, relative to row scale.
    pub feasibility_check_tol: f64,
    /// Largest Hermitian PSD block accepted.
    pub psd_cap: usize,
    /// Route Hermitian blocks with real data through the 2n×2n embedding too.
    pub force_complex_embedding: bool,
    pub grm_trials: usize,
    /// Up to this many doublings of `grm_trials` before giving up.
    pub grm_doublings: u32,
    pub seed: u64,
    pub delta_ao: f64,
    pub delta_gss: f64,
    pub n_sca: usize,
    pub max_ao_iters: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            feas_tol: 1e-8,
            gap_tol: 1e-8,
            max_iter: 200,
            feasibility_check_tol: 1e-7,
            psd_cap: 64,
            force_complex_embedding: false,
            grm_trials: 200,
            grm_doublings: 2,
            seed: 0,
            delta_ao: 1e-4,
            delta_gss: 1e-4,
            n_sca: 10,
            max_ao_iters: 30,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> crate::Result<()> {
        let positive = [
            ("feas_tol", self.feas_tol),
            ("gap_tol", self.gap_tol),
            ("feasibility_check_tol", self.feasibility_check_tol),
            ("delta_ao", self.delta_ao),
            ("delta_gss", self.delta_gss),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(crate::Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_iter == 0 || self.psd_cap == 0 || self.grm_trials == 0 || self.n_sca == 0 || self.max_ao_iters == 0 {
            return Err(crate::Error::Config("iteration and trial counts must be positive".into()));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}
