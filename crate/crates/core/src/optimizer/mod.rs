//! Alternating design of beamformers and IRS phases, the r_th search, the
//! ε-sweep and the baseline schemes.

mod ao;
mod baselines;
mod context;
mod gss;
mod pareto;
mod sp1;
mod sp2;

pub use ao::{alternating_optimize, mrt_directions, AoOptions, AoResult, AoStatus, BeamPolicy};
pub use baselines::{initial_phases, solve_baseline, Scheme};
pub use context::DesignContext;
pub use gss::{golden_section, golden_section_rth, GssResult, Probe, SearchOutcome, FALLBACK_GRID, GOLDEN_RATIO};
pub use pareto::{default_eps_grid, monotone_pass, pareto_sweep, ParetoPoint};
pub use sp1::{solve_sp1, BeamStructure, Sp1Result};
pub use sp2::{
    phase_objective, sca_linearize, sca_objective_parts, solve_sp2, sp2_precompute, tangent_value, LiftedTraces,
    ScaParts, ScaState, ScaSurrogate, Sp2Precomp, Sp2Result,
};
