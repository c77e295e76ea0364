use super::{HumanMode, HumanTrack, SimConfig, SimError};
use crate::geom::{astar_path, GeomError, Point2, Pose2, Scene};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const MAX_REJECTIONS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeInit {
    pub scene_id: String,
    pub robot_start: Pose2,
    pub goal: Point2,
    pub human: HumanTrack,
    pub seed: u64,
}

/// Relative sampling weights for the four scripted human modes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeWeights(pub [f64; 4]);

impl Default for ModeWeights {
    fn default() -> Self {
        Self([1.0; 4])
    }
}

impl ModeWeights {
    pub fn only(mode: HumanMode) -> Self {
        let mut w = [0.0; 4];
        if let Some(i) = HumanMode::EXPLORATION.iter().position(|&m| m == mode) {
            w[i] = 1.0;
        }
        Self(w)
    }

    fn sample(&self, rng: &mut impl Rng) -> HumanMode {
        let total: f64 = self.0.iter().sum();
        let mut u = rng.random_range(0.0..total);
        for (w, m) in self.0.iter().zip(HumanMode::EXPLORATION) {
            if u < *w {
                return m;
            }
            u -= w;
        }
        HumanMode::Absent
    }
}

/// Normal(mean, std) clamped to `[min, max]`.
pub fn sample_human_speed(cfg: &SimConfig, rng: &mut impl Rng) -> f64 {
    let n = Normal::new(cfg.human_speed_mean, cfg.human_speed_std).expect("positive std");
    n.sample(rng).clamp(cfg.human_speed_min, cfg.human_speed_max)
}

fn free_point(scene: &Scene, clearance: f64, rng: &mut impl Rng) -> Option<Point2> {
    let (lo, hi) = scene.spawn_bbox();
    let p = Point2::new(rng.random_range(lo.x..=hi.x), rng.random_range(lo.y..=hi.y));
    (scene.in_spawn_region(p) && scene.clearance(p) >= clearance).then_some(p)
}

/// Rejection-samples a start, a goal between `goal_min` and `goal_max`
/// away, and a human behavior drawn from `weights`.
pub fn sample_episode(scene: &Scene, cfg: &SimConfig, weights: &ModeWeights, rng: &mut impl Rng) -> Result<EpisodeInit, SimError> {
    let c = cfg.spawn_clearance;
    for _ in 0..MAX_REJECTIONS {
        let (Some(start), Some(goal)) = (free_point(scene, c, rng), free_point(scene, c, rng)) else {
            continue;
        };
        let d = start.dist(goal);
        if !(d > cfg.goal_min && d < cfg.goal_max) {
            continue;
        }
        let mode = weights.sample(rng);
        let human = match mode {
            HumanMode::OppositeAstar => {
                let speed = sample_human_speed(cfg, rng);
                match astar_path(scene, goal, start, cfg.astar_cell) {
                    Ok(path) => HumanTrack::walking(mode, &path, speed)?,
                    Err(GeomError::Unreachable) => continue,
                    Err(e) => return Err(e.into()),
                }
            }
            HumanMode::RandomAstar => {
                let speed = sample_human_speed(cfg, rng);
                let (Some(a), Some(b)) = (free_point(scene, c, rng), free_point(scene, c, rng)) else {
                    continue;
                };
                if a.dist(start) < cfg.goal_min || a.dist(b) < 1.0 {
                    continue;
                }
                match astar_path(scene, a, b, cfg.astar_cell) {
                    Ok(path) => HumanTrack::walking(mode, &path, speed)?,
                    Err(GeomError::Unreachable) => continue,
                    Err(e) => return Err(e.into()),
                }
            }
            HumanMode::Static => {
                let Some(p) = free_point(scene, c, rng) else { continue };
                if p.dist(start) < 1.0 || p.dist(goal) < 1.0 {
                    continue;
                }
                HumanTrack::standing(Pose2::new(p.x, p.y, rng.random_range(-PI..PI)))
            }
            _ => HumanTrack::absent(),
        };
        return Ok(EpisodeInit {
            scene_id: scene.id().to_string(),
            robot_start: Pose2::new(start.x, start.y, rng.random_range(-PI..PI)),
            goal,
            human,
            seed: rng.random(),
        });
    }
    Err(SimError::SceneTooConstrained)
}
