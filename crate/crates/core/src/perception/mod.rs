//! From raw geometry to policy input: depth scans, dropout corruption, the
//! β-VAE, human detection, the next-step predictor and state assembly.

pub mod dataset;
mod human;
pub(crate) mod pipeline;
pub mod predictor;
pub mod scan;
mod state;
pub mod vae;
pub mod window;

pub use human::{detect_human, HumanObservation};
pub use pipeline::{Observation, Perception, PerceptionSession};
pub use predictor::{Prediction, Predictor, PredictorSpec, WindowSet};
pub use scan::{corrupt, render_scan, DepthScan};
pub use state::{assemble_state, Layout, Phase, StateVec, Variant};
pub use vae::{LatentState, Vae, VaeSpec};
pub use window::{PerceptionWindow, WindowEntry};

use crate::nn::NnError;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum PerceptionError {
    #[error("window not warm")]
    ColdWindow,
    #[error("state fields do not match variant {0}")]
    VariantMismatch(Variant),
    #[error("unknown variant {0:?}")]
    UnknownVariant(String),
    #[error("model does not match perception config: {0}")]
    ModelMismatch(String),
    #[error(transparent)]
    Nn(#[from] NnError),
}

/// Observation and model sizes for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PerceptionConfig {
    /// Rays per scan.
    pub rays: usize,
    pub fov_deg: f64,
    pub max_range: f64,
    /// Latent dimension.
    pub latent: usize,
    pub vae_hidden: Vec<usize>,
    pub beta: f64,
    /// Weight on the mean squared reconstruction error. The default is the
    /// pixel count of a 128×80 depth frame, so the reconstruction term has
    /// the magnitude of a per-pixel sum at full resolution.
    pub recon_weight: f64,
    pub dropout: f64,
    /// Compression ratio targeted by full-resolution image models, kept for
    /// reference next to [`PerceptionConfig::reduction`].
    pub full_scale_reduction: f64,
    pub predictor_hidden: usize,
    pub predictor_pose_hidden: usize,
}

impl Default for PerceptionConfig {
    fn default() -> Self {
        Self {
            rays: 64,
            fov_deg: 87.0,
            max_range: 6.0,
            latent: 8,
            vae_hidden: vec![32, 16],
            beta: 3.0,
            recon_weight: 128.0 * 80.0,
            dropout: 0.05,
            full_scale_reduction: 320.0,
            predictor_hidden: 64,
            predictor_pose_hidden: 64,
        }
    }
}

impl PerceptionConfig {
    pub fn for_variant(variant: Variant) -> Self {
        Self {
            fov_deg: variant.fov_deg(),
            ..Self::default()
        }
    }

    pub fn fov(&self) -> f64 {
        self.fov_deg.to_radians()
    }

    /// Observation-to-latent compression ratio.
    pub fn reduction(&self) -> f64 {
        self.rays as f64 / self.latent as f64
    }

    pub fn vae_spec(&self) -> VaeSpec {
        VaeSpec {
            rays: self.rays,
            latent: self.latent,
            hidden: self.vae_hidden.clone(),
            beta: self.beta,
            recon_weight: self.recon_weight,
        }
    }

    pub fn predictor_spec(&self) -> PredictorSpec {
        PredictorSpec {
            latent: self.latent,
            hidden: self.predictor_hidden,
            pose_hidden: self.predictor_pose_hidden,
        }
    }
}
