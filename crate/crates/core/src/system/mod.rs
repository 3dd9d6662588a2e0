//! Scenario configuration, geometry, path loss, channel synthesis and the
//! cascaded echo channel.

mod channels;
mod config;
mod echo;
mod scenario;
mod steering;

pub use channels::{
    default_alpha, direct_link_gain, los_components, synthesize_channels, ChannelSet, LosComponents, SensingScene,
};
pub use config::{path_loss_gain, PathLossModel, Point, SceneLayout, SystemConfig};
pub use echo::{cascaded_echo, derivative_scale, lifted_echo, CascadedEcho};
pub use scenario::{Scenario, ScenarioFile};
pub use steering::{steering_derivative, steering_vector};
