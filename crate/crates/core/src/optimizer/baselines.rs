use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{alternating_optimize, AoOptions, AoResult, BeamPolicy, DesignContext};
use crate::conic::SolverSettings;
use crate::error::{Error, Result};
use crate::metrics::{PhaseProfile, ThresholdPair};
use crate::par::derive_seed;

/// Design schemes compared in the sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Proposed,
    /// Communication streams only.
    Bl1,
    /// MRT directions, powers optimized.
    Bl2,
    /// Isotropic directions, powers optimized.
    Bl3,
    /// Random IRS phases, beamformers optimized once.
    Bl4,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [Scheme::Proposed, Scheme::Bl1, Scheme::Bl2, Scheme::Bl3, Scheme::Bl4];

    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed",
            Scheme::Bl1 => "bl1",
            Scheme::Bl2 => "bl2",
            Scheme::Bl3 => "bl3",
            Scheme::Bl4 => "bl4",
        }
    }

    pub fn options(&self) -> AoOptions {
        let (policy, optimize_phases) = match self {
            Scheme::Proposed => (BeamPolicy::Full, true),
            Scheme::Bl1 => (BeamPolicy::CommOnly, true),
            Scheme::Bl2 => (BeamPolicy::Mrt, true),
            Scheme::Bl3 => (BeamPolicy::Isotropic, true),
            Scheme::Bl4 => (BeamPolicy::Full, false),
        };
        AoOptions { policy, optimize_phases, warm_beams: None }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        Scheme::ALL
            .into_iter()
            .find(|k| k.as_str() == t || (t.starts_with("bl-") && k.as_str()[2..] == t[3..]))
            .ok_or_else(|| Error::Config(format!("unknown scheme `{s}` (expected proposed, bl1..bl4)")))
    }
}

/// Initial phases for a realization: uniform in [0, 2π), seeded.
pub fn initial_phases(n: usize, seed: u64) -> PhaseProfile {
    PhaseProfile::random(n, &mut ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x5eed)))
}

/// Run one scheme at fixed thresholds from the phases `v0`. For BL4, `v0`
/// is the random phase profile that stays fixed.
pub fn solve_baseline(
    scheme: Scheme,
    ctx: &DesignContext,
    thresholds: &ThresholdPair,
    settings: &SolverSettings,
    v0: &PhaseProfile,
) -> Result<AoResult> {
    alternating_optimize(ctx, thresholds, settings, v0, &scheme.options())
}
