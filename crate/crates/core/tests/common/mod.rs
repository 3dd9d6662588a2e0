#![allow(dead_code)]

use isasc_core::conic::SolverSettings;
use isasc_core::linalg::{c, cn_matrix, CMat};
use isasc_core::metrics::{CovarianceSet, PhaseProfile};
use isasc_core::system::{ChannelSet, Scenario};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn scenario(m: usize, n: usize) -> Scenario {
    let mut s = Scenario::desk_default();
    s.system = s.system.with_sizes(m, n);
    s
}

pub fn channels(sc: &Scenario, seed: u64) -> ChannelSet {
    sc.channels(seed).expect("channel synthesis")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_phases(n: usize, seed: u64) -> PhaseProfile {
    PhaseProfile::random(n, &mut rng(seed))
}

pub fn random_psd(rng: &mut ChaCha8Rng, m: usize, scale: f64) -> CMat {
    let x = cn_matrix(rng, m, m);
    (&x * x.adjoint()) * c(scale / m as f64)
}

/// Random covariance blocks with total power about `p`.
pub fn random_cov(rng: &mut ChaCha8Rng, m: usize, k: usize, p: f64) -> CovarianceSet {
    let share = p / (k + 2) as f64;
    let w_c = (0..k).map(|_| random_psd(rng, m, share)).collect();
    CovarianceSet::from_blocks(w_c, random_psd(rng, m, share), random_psd(rng, m, share)).unwrap()
}

/// Looser settings that keep the multi-run tests quick.
pub fn quick_settings(seed: u64) -> SolverSettings {
    SolverSettings { delta_gss: 0.1, max_ao_iters: 10, ..SolverSettings::default() }.with_seed(seed)
}
