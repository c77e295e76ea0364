use super::SimError;
use crate::geom::{Point2, Pose2, Trajectory, TrajectorySample};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum HumanMode {
    /// Walks an A* path from the robot's goal to the robot's start.
    OppositeAstar,
    /// Walks an A* path between random free points.
    RandomAstar,
    Static,
    Absent,
    /// Follows the human track recorded with a demonstration.
    DemoReplay,
}

impl HumanMode {
    /// The scripted exploration modes, in sampling-weight order.
    pub const EXPLORATION: [HumanMode; 4] = [
        HumanMode::OppositeAstar,
        HumanMode::RandomAstar,
        HumanMode::Static,
        HumanMode::Absent,
    ];

    pub fn has_path(self) -> bool {
        matches!(self, HumanMode::OppositeAstar | HumanMode::RandomAstar | HumanMode::DemoReplay)
    }

    pub fn is_moving(self) -> bool {
        self.has_path()
    }
}

/// The human's motion for one episode on the episode clock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanTrack {
    pub mode: HumanMode,
    pub path: Option<Trajectory>,
    /// Walking speed in m/s; zero when there is no path.
    pub speed: f64,
    /// Position of a static human.
    #[serde(default)]
    pub pose: Option<Pose2>,
}

impl HumanTrack {
    pub fn absent() -> Self {
        Self {
            mode: HumanMode::Absent,
            path: None,
            speed: 0.0,
            pose: None,
        }
    }

    pub fn standing(pose: Pose2) -> Self {
        Self {
            mode: HumanMode::Static,
            path: None,
            speed: 0.0,
            pose: Some(pose),
        }
    }

    /// Times `polyline` at constant `speed`, starting at t = 0.
    pub fn walking(mode: HumanMode, polyline: &[Point2], speed: f64) -> Result<Self, SimError> {
        if !(speed > 0.0) {
            return Err(SimError::InvalidEpisode("human speed must be positive".into()));
        }
        let mut points = vec![polyline[0]];
        for &p in &polyline[1..] {
            if p.dist(*points.last().unwrap()) > 1e-9 {
                points.push(p);
            }
        }
        if points.len() < 2 {
            return Err(SimError::InvalidEpisode("human path has zero length".into()));
        }
        let mut t = 0.0;
        let mut rows = vec![[0.0, points[0].x, points[0].y]];
        for w in points.windows(2) {
            t += w[0].dist(w[1]) / speed;
            rows.push([t, w[1].x, w[1].y]);
        }
        Ok(Self {
            mode,
            path: Some(Trajectory::from_txy(&rows)?),
            speed,
            pose: None,
        })
    }

    /// Replays a recorded track as is; a track that never moves becomes a
    /// static human.
    pub fn replay(track: Trajectory) -> Self {
        let speed = track.arc_length() / track.duration();
        if speed <= 1e-9 {
            return Self::standing(track.first().pose);
        }
        Self {
            mode: HumanMode::DemoReplay,
            path: Some(track),
            speed,
            pose: None,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let ok = match self.mode {
            HumanMode::Static => self.path.is_none() && self.pose.is_some(),
            HumanMode::Absent => self.path.is_none() && self.pose.is_none(),
            _ => self.path.is_some() && self.speed > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(SimError::InvalidEpisode(format!("inconsistent human track for mode {:?}", self.mode)))
        }
    }

    /// Pose at episode time `t`; tracks hold their end poses outside their
    /// time span.
    pub fn pose_at(&self, t: f64) -> Option<Pose2> {
        match self.mode {
            HumanMode::Absent => None,
            HumanMode::Static => self.pose,
            _ => self.path.as_ref().map(|p| p.pose_at(t)),
        }
    }

    /// Samples the track at the given times.
    pub fn trajectory(&self, times: &[f64]) -> Option<Trajectory> {
        if self.mode == HumanMode::Absent || times.len() < 2 {
            return None;
        }
        let samples = times
            .iter()
            .map(|&t| TrajectorySample {
                t,
                pose: self.pose_at(t).expect("present human has a pose"),
            })
            .collect();
        Trajectory::new(samples).ok()
    }
}
