//! Depth-frame datasets recorded from a noisy A*-following driver, and the
//! conversion into predictor training windows.

use super::window::{feature_dim, WINDOW};
use super::{detect_human, render_scan, HumanObservation, PerceptionConfig, Vae, WindowEntry, WindowSet};
use crate::exec::Execution;
use crate::geom::{astar_path, Point2, Scene};
use crate::nn::NnError;
use crate::sim::{pure_pursuit, sample_episode, Action, HumanMode, ModeWeights, SimConfig, SimError, World};
use ndarray::{Array2, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::io::{self, BufRead, Write};

/// One frame: the clean scan, the human ground truth, and the command the
/// driver issued from this frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub scan: Vec<f64>,
    #[serde(rename = "k_H")]
    pub k_h: u8,
    #[serde(rename = "d_H")]
    pub d_h: f64,
    #[serde(rename = "dalpha_H")]
    pub dalpha_h: f64,
    pub action: [f64; 2],
    pub scene_id: String,
    pub t: f64,
    pub human_mode: HumanMode,
    /// Index of the recording episode within the dataset.
    pub episode: u64,
}

impl FrameRecord {
    pub fn human(&self) -> HumanObservation {
        HumanObservation {
            k_h: self.k_h,
            d_h: self.d_h,
            dalpha_h: self.dalpha_h,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetConfig {
    pub frames: usize,
    pub seed: u64,
    pub mode_weights: ModeWeights,
    /// Standard deviation of the heading noise added to the driver, rad/s.
    pub omega_noise: f64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            frames: 50_000,
            seed: 0,
            mode_weights: ModeWeights::default(),
            omega_noise: 0.4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub frames: usize,
    pub episodes: usize,
    pub human_visible_fraction: f64,
    /// MSE of predicting every scan by the dataset mean scan.
    pub mean_baseline_mse: f64,
}

fn record_episode(
    scenes: &[Scene],
    sim: &SimConfig,
    pcfg: &PerceptionConfig,
    cfg: &DatasetConfig,
    episode: u64,
) -> Result<Vec<FrameRecord>, SimError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ episode.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let scene = &scenes[rng.random_range(0..scenes.len())];
    let init = sample_episode(scene, sim, &cfg.mode_weights, &mut rng)?;
    let path = astar_path(scene, init.robot_start.position(), init.goal, sim.astar_cell).unwrap_or_else(|_| vec![init.goal]);
    let noise = Normal::new(0.0, cfg.omega_noise.max(1e-12)).expect("finite std");
    let speed = rng.random_range(0.25..=1.0) * crate::sim::V_MAX;
    let mut world = World::new(scene, sim, &init)?;
    let mut next_wp = 0;
    let mut out = Vec::new();
    loop {
        let pose = world.robot();
        let human = world.human_disc();
        let scan = render_scan(scene, &pose, human, pcfg.fov(), pcfg.rays, pcfg.max_range);
        let obs = detect_human(scene, &pose, human.map(|c| c.center()), pcfg.fov(), pcfg.max_range);
        while next_wp + 1 < path.len() && path[next_wp].dist(pose.position()) < sim.lookahead {
            next_wp += 1;
        }
        let target: Point2 = path[next_wp];
        let a = pure_pursuit(&pose, target, speed, sim.dt);
        let a = Action::new(a.v, a.omega + noise.sample(&mut rng));
        out.push(FrameRecord {
            scan: scan.rays,
            k_h: obs.k_h,
            d_h: obs.d_h,
            dalpha_h: obs.dalpha_h,
            action: a.as_array(),
            scene_id: scene.id().to_string(),
            t: world.time(),
            human_mode: init.human.mode,
            episode,
        });
        if world.step(a).is_some() {
            break;
        }
    }
    Ok(out)
}

/// Records `cfg.frames` frames from seeded episodes spread over `scenes`.
/// Output is identical under every execution strategy.
pub fn generate_dataset(
    scenes: &[Scene],
    sim: &SimConfig,
    pcfg: &PerceptionConfig,
    cfg: &DatasetConfig,
    exec: Execution,
) -> Result<Vec<FrameRecord>, SimError> {
    if scenes.is_empty() {
        return Err(SimError::InvalidEpisode("no scenes".into()));
    }
    let mut frames = Vec::with_capacity(cfg.frames);
    let mut next = 0u64;
    while frames.len() < cfg.frames {
        // episodes average well under the step cap, so over-provision a bit
        let missing = cfg.frames - frames.len();
        let batch = (missing / 40).clamp(1, 4096) as u64;
        let ids: Vec<u64> = (next..next + batch).collect();
        next += batch;
        for ep in exec.try_map(ids, |e| record_episode(scenes, sim, pcfg, cfg, e))? {
            frames.extend(ep);
        }
    }
    frames.truncate(cfg.frames);
    Ok(frames)
}

pub fn scan_matrix(records: &[FrameRecord]) -> Array2<f64> {
    let r = records.first().map_or(0, |f| f.scan.len());
    let mut m = Array2::zeros((records.len(), r));
    for (mut row, f) in m.rows_mut().into_iter().zip(records) {
        row.assign(&ndarray::ArrayView1::from(&f.scan));
    }
    m
}

pub fn dataset_stats(records: &[FrameRecord]) -> DatasetStats {
    let scans = scan_matrix(records);
    let mut episodes: Vec<u64> = records.iter().map(|r| r.episode).collect();
    episodes.dedup();
    DatasetStats {
        frames: records.len(),
        episodes: episodes.len(),
        human_visible_fraction: records.iter().filter(|r| r.k_h == 1).count() as f64 / records.len().max(1) as f64,
        mean_baseline_mse: super::vae::mean_baseline_mse(scans.view(), scans.view()),
    }
}

pub fn write_jsonl<W: Write>(mut w: W, records: &[FrameRecord]) -> io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        writeln!(w)?;
    }
    w.flush()
}

pub fn read_jsonl<R: BufRead>(r: R) -> io::Result<Vec<FrameRecord>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, format!("line {}: {e}", i + 1)))?,
        );
    }
    Ok(out)
}

/// Splits the records into per-episode runs of consecutive frames.
pub fn episodes(records: &[FrameRecord]) -> Vec<&[FrameRecord]> {
    records
        .chunk_by(|a, b| a.episode == b.episode && a.scene_id == b.scene_id && b.t > a.t)
        .collect()
}

/// Predictor windows: for every frame with a successor in the same episode,
/// the window ends at that frame and the target is the successor's mean
/// latent and human pose. Each entry carries the action that led into it.
pub fn build_windows(records: &[FrameRecord], vae: &Vae) -> Result<WindowSet, NnError> {
    let l = vae.latent_dim();
    let f = feature_dim(l);
    let mut xs = Vec::new();
    let mut tl = Vec::new();
    let mut tp = Vec::new();
    let mut dynamic = Vec::new();
    for ep in episodes(records) {
        if ep.len() < 2 {
            continue;
        }
        let latents = vae.encode_batch(scan_matrix(ep).view())?;
        let entries: Vec<WindowEntry> = ep
            .iter()
            .enumerate()
            .map(|(i, r)| WindowEntry {
                latent: latents.row(i).to_vec(),
                human: r.human(),
                action: if i == 0 { [0.0, 0.0] } else { ep[i - 1].action },
            })
            .collect();
        for i in 0..ep.len() - 1 {
            for k in 0..WINDOW {
                let j = (i + k + 1).saturating_sub(WINDOW);
                xs.extend(entries[j].features());
            }
            tl.extend(latents.row(i + 1).iter());
            let next = ep[i + 1].human();
            tp.extend([next.d_h, next.dalpha_h]);
            dynamic.push(ep[i].human_mode.is_moving() && (next.visible() || ep[i].k_h == 1));
        }
    }
    let n = dynamic.len();
    Ok(WindowSet {
        x: Array3::from_shape_vec((n, WINDOW, f), xs).expect("window layout"),
        target_latent: Array2::from_shape_vec((n, l), tl).expect("latent layout"),
        target_pose: Array2::from_shape_vec((n, 2), tp).expect("pose layout"),
        dynamic,
    })
}
