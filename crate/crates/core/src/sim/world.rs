use super::{step_kinematics, Action, EpisodeInit, SimConfig, SimError};
use crate::geom::{Circle, Pose2, Scene};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Termination {
    Collision,
    Goal,
    Timeout,
}

/// Robot and human state for one episode, without perception or rewards.
#[derive(Debug, Clone)]
pub struct World<'a> {
    scene: &'a Scene,
    cfg: &'a SimConfig,
    init: &'a EpisodeInit,
    robot: Pose2,
    steps: usize,
}

impl<'a> World<'a> {
    pub fn new(scene: &'a Scene, cfg: &'a SimConfig, init: &'a EpisodeInit) -> Result<Self, SimError> {
        if init.scene_id != scene.id() {
            return Err(SimError::SceneMismatch {
                expected: init.scene_id.clone(),
                got: scene.id().to_string(),
            });
        }
        init.human.validate()?;
        Ok(Self {
            scene,
            cfg,
            init,
            robot: init.robot_start,
            steps: 0,
        })
    }

    pub fn scene(&self) -> &'a Scene {
        self.scene
    }

    pub fn config(&self) -> &'a SimConfig {
        self.cfg
    }

    pub fn init(&self) -> &'a EpisodeInit {
        self.init
    }

    pub fn robot(&self) -> Pose2 {
        self.robot
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn time(&self) -> f64 {
        self.steps as f64 * self.cfg.dt
    }

    pub fn human_pose(&self) -> Option<Pose2> {
        self.init.human.pose_at(self.time())
    }

    pub fn human_disc(&self) -> Option<Circle> {
        self.human_pose().map(|p| Circle {
            c: [p.x, p.y],
            r: self.cfg.human_radius,
        })
    }

    /// Robot disc overlaps a wall, an obstacle or the human.
    pub fn in_collision(&self) -> bool {
        let p = self.robot.position();
        self.scene.disc_collides(p, self.cfg.robot_radius)
            || self
                .human_pose()
                .is_some_and(|h| h.position().dist(p) < self.cfg.robot_radius + self.cfg.human_radius)
    }

    pub fn at_goal(&self) -> bool {
        self.robot.position().dist(self.init.goal) < self.cfg.goal_radius
    }

    /// Advances one control period. Termination checks run in the order
    /// collision, goal, timeout (`max_steps` reached).
    pub fn step(&mut self, a: Action) -> Option<Termination> {
        self.robot = step_kinematics(&self.robot, a, self.cfg.dt);
        self.steps += 1;
        if self.in_collision() {
            Some(Termination::Collision)
        } else if self.at_goal() {
            Some(Termination::Goal)
        } else if self.steps >= self.cfg.max_steps {
            Some(Termination::Timeout)
        } else {
            None
        }
    }
}
