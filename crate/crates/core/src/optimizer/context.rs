use crate::error::Result;
use crate::linalg::C64;
use crate::metrics::{crb_from_j, NoisePowers, SemanticModel};
use crate::system::{ChannelSet, Scenario};

/// Everything a design run needs besides the thresholds and settings.
#[derive(Debug, Clone, Copy)]
pub struct DesignContext<'a> {
    pub ch: &'a ChannelSet,
    pub noise: NoisePowers,
    pub p_max: f64,
    pub block_length: usize,
    pub semantic: SemanticModel,
}

impl<'a> DesignContext<'a> {
    pub fn new(scenario: &Scenario, ch: &'a ChannelSet) -> Self {
        Self {
            ch,
            noise: scenario.noise(),
            p_max: scenario.system.p_max,
            block_length: scenario.system.block_length(),
            semantic: scenario.semantic,
        }
    }

    pub fn alpha(&self) -> C64 {
        self.ch.scene.alpha
    }

    pub fn crb(&self, j: f64) -> Result<f64> {
        crb_from_j(j, self.block_length, self.noise.echo, self.alpha())
    }

    pub fn with_p_max(mut self, p_max: f64) -> Self {
        self.p_max = p_max;
        self
    }
}
