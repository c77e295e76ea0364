//! Run configuration: every tunable of every command in one JSON document.
//! Missing keys take their defaults; a resolved copy is written next to
//! each command's outputs.

use crate::{write_json, CliResult};
use prefnav_core::learn::Td3Config;
use prefnav_core::perception::dataset::DatasetConfig;
use prefnav_core::perception::predictor::PredictorTrainConfig;
use prefnav_core::perception::vae::VaeTrainConfig;
use prefnav_core::perception::PerceptionConfig;
use prefnav_core::sim::SimConfig;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const SNAPSHOT_FILE: &str = "config.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalSettings {
    /// Rollouts per scenario.
    pub n: usize,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self { n: 50 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub sim: SimConfig,
    pub perception: PerceptionConfig,
    pub dataset: DatasetConfig,
    pub vae_train: VaeTrainConfig,
    pub predictor_train: PredictorTrainConfig,
    pub td3: Td3Config,
    pub eval: EvalSettings,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }
}

/// Overrides `slot` when a flag was given.
pub fn apply<T>(slot: &mut T, flag: Option<T>) {
    if let Some(v) = flag {
        *slot = v;
    }
}

pub fn write_snapshot(dir: &Path, cfg: &RunConfig) -> CliResult {
    write_json(&dir.join(SNAPSHOT_FILE), cfg)
}
