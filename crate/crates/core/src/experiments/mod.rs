//! Monte-Carlo orchestration, result tables and the oracle suite.
//!
//! Work is split into (realization, sweep point, scheme) units that run
//! through [`crate::par::map_indexed`]; rows come back in unit order so the
//! CSV bytes depend only on the spec. Wall times go to a separate sidecar.

mod record;
mod runners;
mod spec;
mod validate;

pub use record::{
    read_csv, summarize, write_csv, BcRecord, OracleRow, Quartiles, RowStatus, RunOutput, RunRecord, Summary,
    SummaryGroup, TimingRow, TraceRow, SCHEMA_VERSION,
};
pub use runners::{
    channel_seed, fit_slope, run_bc_compare, run_convergence, run_elements_sweep, run_experiment, run_pareto,
    run_power_sweep,
};
pub use spec::{ExperimentKind, ExperimentSpec};
pub use validate::run_validation_suite;
