//! TD3 with a behavioral-cloning term on demonstration batches.

mod buffer;
mod bundle;
mod train;

pub use buffer::{Batch, ReplayBuffer};
pub use bundle::{ActorGradients, ActorStats, BcReduction, CriticStats, PolicyBundle};
pub use train::{load_demo_transitions, train, write_log_csv, TrainLogRow, TrainOutcome, TrainProgress};

use crate::nn::NnError;
use crate::sim::SimError;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum LearnError {
    #[error("no demonstrations loaded")]
    NoDemos,
    #[error("value divergence at step {step}: |Q| = {q:e}")]
    Divergence { step: u64, q: f64 },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Td3Config {
    pub gamma: f64,
    pub lr_actor: f64,
    pub lr_critic: f64,
    pub buffer_capacity: usize,
    pub batch_e: usize,
    pub batch_d: usize,
    /// Exploration noise std in normalized action units.
    pub sigma_explore: f64,
    pub sigma_target: f64,
    pub noise_clip: f64,
    pub lambda_rl: f64,
    pub lambda_bc: f64,
    pub bc_reduction: BcReduction,
    pub warmup: usize,
    pub policy_delay: u64,
    pub tau: f64,
    pub hidden: Vec<usize>,
    /// Environment steps including warmup.
    pub total_steps: usize,
    pub scene_rotation: usize,
    /// Chance that an episode replays a demonstration scenario.
    pub demo_episode_prob: f64,
    pub q_limit: f64,
    pub seed: u64,
}

impl Default for Td3Config {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            lr_actor: 1e-4,
            lr_critic: 8e-4,
            buffer_capacity: 200_000,
            batch_e: 64,
            batch_d: 64,
            sigma_explore: 0.2,
            sigma_target: 0.05,
            noise_clip: 0.5,
            lambda_rl: 30.0 / 4.0,
            lambda_bc: 10.0 / 4.0,
            bc_reduction: BcReduction::Sum,
            warmup: 5_000,
            policy_delay: 2,
            tau: 0.005,
            hidden: vec![256, 256],
            total_steps: 200_000,
            scene_rotation: 50,
            demo_episode_prob: 0.2,
            q_limit: 1e6,
            seed: 0,
        }
    }
}

impl Td3Config {
    /// Plain TD3 (no behavioral cloning), as used without demonstrations.
    pub fn without_demos(mut self) -> Self {
        self.lambda_bc = 0.0;
        self.demo_episode_prob = 0.0;
        self
    }

    pub fn validate(&self) -> Result<(), LearnError> {
        let positive = [
            ("gamma", self.gamma),
            ("lr_actor", self.lr_actor),
            ("lr_critic", self.lr_critic),
            ("sigma_explore", self.sigma_explore),
            ("sigma_target", self.sigma_target),
            ("noise_clip", self.noise_clip),
            ("lambda_rl", self.lambda_rl),
            ("tau", self.tau),
            ("q_limit", self.q_limit),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(LearnError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.gamma > 1.0 || self.tau > 1.0 {
            return Err(LearnError::Config("gamma and tau must not exceed 1".into()));
        }
        if self.lambda_bc < 0.0 || !(0.0..=1.0).contains(&self.demo_episode_prob) {
            return Err(LearnError::Config("lambda_bc and demo_episode_prob out of range".into()));
        }
        if self.batch_e == 0 || self.batch_e > self.buffer_capacity {
            return Err(LearnError::Config("batch_e must be in 1..=buffer_capacity".into()));
        }
        if self.policy_delay == 0 || self.scene_rotation == 0 || self.hidden.is_empty() {
            return Err(LearnError::Config("policy_delay, scene_rotation and hidden must be nonzero".into()));
        }
        if self.warmup < self.batch_e || self.warmup > self.total_steps {
            return Err(LearnError::Config("warmup must lie between batch_e and total_steps".into()));
        }
        Ok(())
    }
}
