//! On-disk layout shared by the command line and the service: scene and
//! demo directories, model training from a frame dataset, and policy
//! checkpoints that carry their perception models.

use crate::geom::{GeomError, Scene};
use crate::learn::{LearnError, PolicyBundle};
use crate::nn::{Checkpoint, NnError};
use crate::perception::dataset::{build_windows, scan_matrix, FrameRecord};
use crate::perception::predictor::{copy_last_loss, train_predictor, PredictorLoss, PredictorTrainConfig};
use crate::perception::vae::{mean_baseline_mse, train_vae, VaeTrainConfig};
use crate::perception::scan::corrupt_in_place;
use crate::perception::{Perception, PerceptionConfig, PerceptionError, Phase, Predictor, Vae, Variant};
use crate::sim::{Demonstration, SimError};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::sync::Arc;

pub const DATA_DIR_ENV: &str = "PREFNAV_DATA_DIR";

#[derive(Debug, thiserror::Error)]
pub enum ArtifactError {
    #[error("{0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error("{0}: {1}")]
    Parse(PathBuf, String),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Perception(#[from] PerceptionError),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// `$PREFNAV_DATA_DIR`, or `data` under the working directory.
pub fn data_root() -> PathBuf {
    std::env::var_os(DATA_DIR_ENV).map_or_else(|| PathBuf::from("data"), PathBuf::from)
}

fn json_files(dir: &Path) -> Result<Vec<PathBuf>, ArtifactError> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| ArtifactError::Io(dir.to_path_buf(), e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    Ok(files)
}

fn stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Scenes from a single file or every `*.json` in a directory, sorted by
/// file name.
pub fn load_scenes(path: &Path) -> Result<Vec<Scene>, ArtifactError> {
    let files = if path.is_dir() { json_files(path)? } else { vec![path.to_path_buf()] };
    files
        .iter()
        .map(|f| Scene::load(f).map_err(|e: GeomError| ArtifactError::Parse(f.clone(), e.to_string())))
        .collect()
}

/// Demonstrations keyed by file stem, from a file or a directory.
pub fn load_demos(path: &Path) -> Result<Vec<(String, Demonstration)>, ArtifactError> {
    let files = if path.is_dir() { json_files(path)? } else { vec![path.to_path_buf()] };
    files
        .iter()
        .map(|f| {
            let text = std::fs::read_to_string(f).map_err(|e| ArtifactError::Io(f.clone(), e))?;
            let d = Demonstration::from_json(&text).map_err(|e| ArtifactError::Parse(f.clone(), e.to_string()))?;
            Ok((stem(f), d))
        })
        .collect()
}

/// Splits records into train and test by whole episodes; every
/// `holdout_every`-th episode is held out.
pub fn split_by_episode(records: &[FrameRecord], holdout_every: u64) -> (Vec<FrameRecord>, Vec<FrameRecord>) {
    records
        .iter()
        .cloned()
        .partition(|r| holdout_every == 0 || r.episode % holdout_every != holdout_every - 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VaeReport {
    pub train_frames: usize,
    pub test_frames: usize,
    pub epoch_losses: Vec<f64>,
    /// Reconstruction MSE on clean held-out scans.
    pub test_mse: f64,
    /// Reconstruction MSE when the held-out input is dropout-corrupted.
    pub test_mse_corrupted: f64,
    pub baseline_mse: f64,
}

impl VaeReport {
    pub fn ratio(&self) -> f64 {
        self.test_mse / self.baseline_mse
    }
}

pub fn fit_vae(
    records: &[FrameRecord],
    pcfg: &PerceptionConfig,
    tcfg: &VaeTrainConfig,
    seed: u64,
) -> Result<(Vae, VaeReport), ArtifactError> {
    let (train, test) = split_by_episode(records, 10);
    if train.is_empty() || test.is_empty() {
        return Err(ArtifactError::Invalid("dataset too small for a held-out split".into()));
    }
    let (xtr, xte) = (scan_matrix(&train), scan_matrix(&test));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vae = Vae::new(pcfg.vae_spec(), &mut rng);
    let epoch_losses = train_vae(&mut vae, xtr.view(), tcfg, &mut rng)?;
    let mut noisy = xte.clone();
    for mut row in noisy.rows_mut() {
        corrupt_in_place(row.as_slice_mut().expect("owned rows are contiguous"), pcfg.dropout, &mut rng);
    }
    let report = VaeReport {
        train_frames: train.len(),
        test_frames: test.len(),
        epoch_losses,
        test_mse: vae.reconstruction_mse(xte.view(), xte.view())?,
        test_mse_corrupted: vae.reconstruction_mse(xte.view(), noisy.view())?,
        baseline_mse: mean_baseline_mse(xtr.view(), xte.view()),
    };
    Ok((vae, report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorReport {
    pub train_windows: usize,
    pub test_dynamic_windows: usize,
    pub epoch_losses: Vec<f64>,
    pub test: PredictorLoss,
    pub copy_last: PredictorLoss,
}

/// Trains the predictor on windows encoded by `vae` and scores it on the
/// held-out windows with a moving, visible human.
pub fn fit_predictor(
    records: &[FrameRecord],
    vae: &Vae,
    pcfg: &PerceptionConfig,
    tcfg: &PredictorTrainConfig,
    seed: u64,
) -> Result<(Predictor, PredictorReport), ArtifactError> {
    let (train, test) = split_by_episode(records, 10);
    let wtr = build_windows(&train, vae)?;
    let wte = build_windows(&test, vae)?;
    let dyn_idx: Vec<usize> = (0..wte.len()).filter(|&i| wte.dynamic[i]).collect();
    if wtr.is_empty() || dyn_idx.is_empty() {
        return Err(ArtifactError::Invalid("dataset has no dynamic-human test windows".into()));
    }
    let wdyn = wte.select(&dyn_idx);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = Predictor::new(pcfg.predictor_spec(), &mut rng);
    let epoch_losses = train_predictor(&mut model, &wtr, tcfg, &mut rng)?;
    let report = PredictorReport {
        train_windows: wtr.len(),
        test_dynamic_windows: wdyn.len(),
        epoch_losses,
        test: model.evaluate(&wdyn)?,
        copy_last: copy_last_loss(&wdyn, pcfg.latent),
    };
    Ok((model, report))
}

/// Perception models as stored next to a policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerceptionBundle {
    pub variant: Variant,
    pub config: PerceptionConfig,
    pub vae: Checkpoint,
    pub predictor: Option<Checkpoint>,
}

impl PerceptionBundle {
    pub fn new(variant: Variant, config: PerceptionConfig, vae: &Vae, predictor: Option<&Predictor>) -> Self {
        Self {
            variant,
            config,
            vae: vae.to_checkpoint(0, 0),
            predictor: predictor.map(|p| p.to_checkpoint(0, 0)),
        }
    }

    pub fn perception(&self, phase: Phase) -> Result<Perception, ArtifactError> {
        let vae = Vae::from_checkpoint(&self.vae)?;
        let predictor = self.predictor.as_ref().map(Predictor::from_checkpoint).transpose()?;
        Ok(Perception::new(self.config.clone(), self.variant, Arc::new(vae), predictor.map(Arc::new))?.with_phase(phase))
    }
}

pub fn save_policy(
    path: &Path,
    bundle: &PolicyBundle,
    perception: &PerceptionBundle,
    seed: u64,
    steps: u64,
) -> Result<(), ArtifactError> {
    let extra = serde_json::to_value(perception).map_err(|e| ArtifactError::Invalid(e.to_string()))?;
    let ck = bundle.to_checkpoint(seed, steps, extra);
    crate::write_atomic(path, ck.to_json().as_bytes()).map_err(|e| ArtifactError::Io(path.to_path_buf(), e))
}

/// Loaded policy with its perception models, ready for evaluation.
#[derive(Debug, Clone)]
pub struct LoadedPolicy {
    pub bundle: PolicyBundle,
    pub models: PerceptionBundle,
    pub perception: Perception,
}

pub fn load_policy(path: &Path) -> Result<LoadedPolicy, ArtifactError> {
    let ck = Checkpoint::load(path)?;
    let bundle = PolicyBundle::from_checkpoint(&ck)?;
    let models: PerceptionBundle = serde_json::from_value(ck.manifest.config["run"].clone())
        .map_err(|e| ArtifactError::Parse(path.to_path_buf(), format!("perception models: {e}")))?;
    let perception = models.perception(Phase::Eval)?;
    if perception.state_dim() != bundle.state_dim() {
        return Err(ArtifactError::Invalid("policy and perception disagree on state size".into()));
    }
    Ok(LoadedPolicy {
        bundle,
        models,
        perception,
    })
}
