//! Differential-drive episodes: kinematics, sparse rewards, episode and human
//! sampling, the step loop, and demonstration replay.

pub(crate) mod demo;
mod engine;
mod episode;
mod human;
pub mod log;
mod reward;
mod world;

pub use demo::{demo_to_transitions, pure_pursuit, track_demo, DemoMeta, DemoReplay, Demonstration, TrackedDemo};
pub use engine::{run_episode, Episode, EpisodeResult, Outcome, Policy, Transition};
pub use episode::{sample_episode, sample_human_speed, EpisodeInit, ModeWeights};
pub use human::{HumanMode, HumanTrack};
pub use reward::{compute_reward, RewardEvent, Source, C_REW};
pub use world::{Termination, World};

use crate::geom::{normalize_angle, GeomError, Pose2};
use crate::perception::PerceptionError;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const V_MAX: f64 = 0.5;
pub const OMEGA_MAX: f64 = PI;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("scene too constrained")]
    SceneTooConstrained,
    #[error("policy divergence")]
    PolicyDivergence,
    #[error("untrackable demonstration: replay is {deviation:.3} m off the drawn path near ({:.2}, {:.2})", at[0], at[1])]
    Untrackable { at: [f64; 2], deviation: f64 },
    #[error("invalid demonstration: collision at ({:.2}, {:.2})", at[0], at[1])]
    InvalidDemonstration { at: [f64; 2] },
    #[error("episode is for scene {expected:?}, got {got:?}")]
    SceneMismatch { expected: String, got: String },
    #[error("invalid episode: {0}")]
    InvalidEpisode(String),
    #[error("episode already finished")]
    Finished,
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Perception(#[from] PerceptionError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub dt: f64,
    pub max_steps: usize,
    pub goal_radius: f64,
    pub robot_radius: f64,
    pub human_radius: f64,
    pub gamma: f64,
    pub goal_min: f64,
    pub goal_max: f64,
    /// Minimum wall clearance of sampled start, goal and human positions.
    pub spawn_clearance: f64,
    pub human_speed_mean: f64,
    pub human_speed_std: f64,
    pub human_speed_min: f64,
    pub human_speed_max: f64,
    pub astar_cell: f64,
    pub lookahead: f64,
    pub max_tracking_error: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.2,
            max_steps: 150,
            goal_radius: 0.3,
            robot_radius: 0.18,
            human_radius: 0.3,
            gamma: 0.99,
            goal_min: 1.5,
            goal_max: 6.0,
            spawn_clearance: 0.35,
            human_speed_mean: 0.5,
            human_speed_std: 0.3,
            human_speed_min: 0.1,
            human_speed_max: 1.5,
            astar_cell: crate::geom::DEFAULT_CELL,
            lookahead: 0.4,
            max_tracking_error: 0.2,
        }
    }
}

/// Velocity command. Constructors clamp into the control limits; NaN passes
/// through so callers can detect divergence.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Action {
    pub v: f64,
    pub omega: f64,
}

impl Action {
    pub fn new(v: f64, omega: f64) -> Self {
        Self {
            v: v.clamp(0.0, V_MAX),
            omega: omega.clamp(-OMEGA_MAX, OMEGA_MAX),
        }
    }

    /// Maps `[-1, 1]²` onto `v ∈ [0, V_MAX]`, `ω ∈ [−π, π]`.
    pub fn from_normalized(u: [f64; 2]) -> Self {
        Self::new(
            (u[0].clamp(-1.0, 1.0) + 1.0) * 0.5 * V_MAX,
            u[1].clamp(-1.0, 1.0) * OMEGA_MAX,
        )
    }

    pub fn normalized(&self) -> [f64; 2] {
        [2.0 * self.v / V_MAX - 1.0, self.omega / OMEGA_MAX]
    }

    pub fn is_finite(&self) -> bool {
        self.v.is_finite() && self.omega.is_finite()
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.v, self.omega]
    }
}

/// Exact unicycle integration over `dt`.
pub fn step_kinematics(pose: &Pose2, a: Action, dt: f64) -> Pose2 {
    let (v, w) = (a.v, a.omega);
    if w.abs() < 1e-9 {
        Pose2::new(pose.x + v * dt * pose.theta.cos(), pose.y + v * dt * pose.theta.sin(), pose.theta)
    } else {
        let r = v / w;
        let th = pose.theta + w * dt;
        Pose2::new(
            pose.x + r * (th.sin() - pose.theta.sin()),
            pose.y - r * (th.cos() - pose.theta.cos()),
            normalize_angle(th),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn kinematics_examples() {
        let p = step_kinematics(&Pose2::new(0.0, 0.0, 0.0), Action::new(0.5, 0.0), 0.2);
        assert_abs_diff_eq!(p.x, 0.1, epsilon = 1e-15);
        assert_eq!((p.y, p.theta), (0.0, 0.0));
        let p = step_kinematics(&Pose2::new(0.0, 0.0, 0.0), Action::new(0.0, PI), 0.2);
        assert_eq!((p.x, p.y), (0.0, 0.0));
        assert_abs_diff_eq!(p.theta, 0.2 * PI, epsilon = 1e-15);
        let p = step_kinematics(&Pose2::new(0.0, 0.0, 0.0), Action::new(0.5, PI / 2.0), 1.0);
        let r = 0.5 / (PI / 2.0);
        assert_abs_diff_eq!(p.x, r, epsilon = 1e-12);
        assert_abs_diff_eq!(p.y, r, epsilon = 1e-12);
        assert_abs_diff_eq!(p.theta, PI / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r, 0.3183, epsilon = 1e-4);
    }

    #[test]
    fn action_mapping() {
        assert_eq!(Action::from_normalized([-1.0, 0.0]), Action::new(0.0, 0.0));
        assert_eq!(Action::from_normalized([1.0, 1.0]), Action::new(0.5, PI));
        assert_eq!(Action::new(-1.0, 9.0), Action { v: 0.0, omega: PI });
        assert!(!Action::new(f64::NAN, 0.0).is_finite());
        let a = Action::new(0.3, -1.0);
        let b = Action::from_normalized(a.normalized());
        assert_abs_diff_eq!(a.v, b.v, epsilon = 1e-15);
        assert_abs_diff_eq!(a.omega, b.omega, epsilon = 1e-15);
    }

    proptest! {
        #[test]
        fn arc_matches_fine_euler(v in 0.0f64..0.5, w in -PI..PI, th in -PI..PI) {
            // many tiny Euler steps converge to the exact arc
            let start = Pose2::new(1.0, -2.0, th);
            let exact = step_kinematics(&start, Action::new(v, w), 0.2);
            let (mut x, mut y, mut t) = (1.0, -2.0, th);
            let n = 20_000;
            let h = 0.2 / n as f64;
            for _ in 0..n {
                x += v * h * (t + 0.5 * w * h).cos();
                y += v * h * (t + 0.5 * w * h).sin();
                t += w * h;
            }
            prop_assert!((exact.x - x).abs() < 1e-9 && (exact.y - y).abs() < 1e-9);
            prop_assert!(normalize_angle(exact.theta - t).abs() < 1e-9);
        }
    }
}
