//! The aggregate configuration shared by every run mode.

use core::fmt;

use serde::{Deserialize, Serialize};

use crate::automation::{AutomationConfig, AutomationError};
use crate::experiment::{ExperimentConfig, ExperimentError};
use crate::perception::PerceptionConfig;
use crate::scenario::{build_road, ScenarioConfig, ScenarioError};
use crate::sim::{SimConfig, SimError};
use crate::stats::StatsConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SessionConfig {
    /// Ticks between world checkpoints in the log.
    pub checkpoint_interval: u64,
    /// Scenario seed used when a participant has none of its own.
    pub scenario_seed: u64,
    pub log_dir: alloc::string::String,
    /// Address the live server listens on.
    pub listen: alloc::string::String,
    /// Capacity of the outgoing frame queue in live mode.
    pub outbox_capacity: usize,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            checkpoint_interval: 60,
            scenario_seed: 1,
            log_dir: "logs".into(),
            listen: "127.0.0.1:8765".into(),
            outbox_capacity: 8,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub sim: SimConfig,
    pub automation: AutomationConfig,
    pub perception: PerceptionConfig,
    pub scenario: ScenarioConfig,
    pub experiment: ExperimentConfig,
    pub stats: StatsConfig,
    pub session: SessionConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    Sim(SimError),
    Automation(AutomationError),
    Scenario(ScenarioError),
    Experiment(ExperimentError),
    Invalid(&'static str),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Sim(e) => write!(f, "[sim] {e}"),
            ConfigError::Automation(e) => write!(f, "[automation] {e}"),
            ConfigError::Scenario(e) => write!(f, "[scenario] {e}"),
            ConfigError::Experiment(e) => write!(f, "[experiment] {e}"),
            ConfigError::Invalid(what) => f.write_str(what),
        }
    }
}

impl Config {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.sim.validate().map_err(ConfigError::Sim)?;
        self.automation
            .acc
            .validate()
            .map_err(ConfigError::Automation)?;
        let t = &self.automation.thresholds;
        if !(t.brake > 0.0 && t.brake <= 1.0 && t.steer > 0.0 && t.steer <= 1.0) {
            return Err(ConfigError::Invalid(
                "[automation] intervention thresholds must be in (0, 1]",
            ));
        }
        if !self.automation.lkas.gain.is_finite() || self.automation.lkas.lane_lookahead <= 0.0 {
            return Err(ConfigError::Invalid("[automation] invalid LKAS parameters"));
        }
        let cam = &self.perception.camera;
        if !(cam.focal_length > 0.0 && cam.image_width > 0 && cam.image_height > 0) {
            return Err(ConfigError::Invalid("[perception.camera] focal length and image size must be positive"));
        }
        if !(cam.max_range > 0.0 && cam.near_plane > 0.0) {
            return Err(ConfigError::Invalid("[perception.camera] ranges must be positive"));
        }
        if !(0.0..=1.0).contains(&self.perception.occlusion_threshold) {
            return Err(ConfigError::Invalid("[perception] occlusion_threshold must be in [0, 1]"));
        }
        if self
            .perception
            .recall
            .iter()
            .any(|(_, r)| !(0.0..=1.0).contains(r))
        {
            return Err(ConfigError::Invalid("[perception] recall values must be in [0, 1]"));
        }
        build_road(&self.scenario).map_err(ConfigError::Scenario)?;
        self.experiment.validate().map_err(ConfigError::Experiment)?;
        if !(self.stats.alpha > 0.0 && self.stats.alpha < 1.0) {
            return Err(ConfigError::Invalid("[stats] alpha must be in (0, 1)"));
        }
        if self.stats.exact_cap > 40 {
            return Err(ConfigError::Invalid("[stats] exact_cap above 40 is not supported"));
        }
        if self.session.checkpoint_interval == 0 {
            return Err(ConfigError::Invalid("[session] checkpoint_interval must be at least 1"));
        }
        Ok(())
    }
}
