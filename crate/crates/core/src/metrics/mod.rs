//! Closed-form performance metrics: covariances, SINRs, Fisher information
//! and CRB, semantic similarity/rates/secrecy, and the bit-oriented rates.

mod bc;
mod beamformer;
mod fim;
mod phase;
mod semantic;
mod sinr;

pub use bc::{bc_rate, bc_secrecy, BcModel, DEFAULT_CQI_TABLE};
pub use beamformer::{covariance_from_beamformers, BeamformerSet, CovarianceSet};
pub use fim::{
    crb_from_j, crb_theta_closed, crb_theta_fim, fim_from_traces, fim_theta, j_value, EchoTraces, FimMatrix,
};
pub use phase::PhaseProfile;
pub use semantic::{
    invert_similarity, semantic_rate, semantic_similarity, sinr_thresholds, ssr_from_sinrs, ssr_worst, SemanticModel,
    ThresholdPair,
};
pub use sinr::{all_sinrs, sinr_eve, sinr_scu, NoisePowers};
