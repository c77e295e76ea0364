//! Planar geometry: poses, robot-centric polar coordinates, trajectories,
//! polygonal scenes with raycasting, and grid A* for scripted humans.

mod astar;
pub(crate) mod scene;
mod trajectory;

pub use astar::{astar_path, GridMap, GridPath, DEFAULT_CELL};
pub use scene::{Circle, Scene, SceneFile, Shape};
pub use trajectory::{polyline_length, resample_points, Interpolation, Trajectory, TrajectorySample};

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("zero-length trajectory")]
    ZeroLength,
    #[error("trajectory needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("timestamps must be strictly increasing (index {0})")]
    NonMonotoneTime(usize),
    #[error("non-finite coordinate at index {0}")]
    NonFinite(usize),
    #[error("resample count must be at least 2, got {0}")]
    BadCount(usize),
    #[error("unreachable")]
    Unreachable,
    #[error("invalid scene: {0}")]
    InvalidScene(String),
}

/// Wraps an angle into (−π, π].
pub fn normalize_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Point2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn lerp(self, other: Point2, s: f64) -> Point2 {
        self + (other - self) * s
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

impl From<[f64; 2]> for Point2 {
    fn from(p: [f64; 2]) -> Self {
        Point2::new(p[0], p[1])
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

/// World pose. `theta` is kept in (−π, π].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2 {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }

    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    /// Maps a point given in this pose's frame into world coordinates.
    pub fn transform_point(&self, local: Point2) -> Point2 {
        let (s, c) = self.theta.sin_cos();
        Point2::new(
            self.x + c * local.x - s * local.y,
            self.y + s * local.x + c * local.y,
        )
    }
}

/// Robot-centric polar reference. The pair (−1, 0) is the "not observed"
/// sentinel; every other value has a non-negative distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarRef {
    pub distance: f64,
    pub bearing: f64,
}

impl PolarRef {
    pub const SENTINEL: PolarRef = PolarRef {
        distance: -1.0,
        bearing: 0.0,
    };

    pub fn is_sentinel(&self) -> bool {
        *self == Self::SENTINEL
    }

    /// Inverse of [`to_polar`]: world point described by this reference.
    pub fn to_world(&self, frame: &Pose2) -> Point2 {
        let a = frame.theta + self.bearing;
        Point2::new(
            frame.x + self.distance * a.cos(),
            frame.y + self.distance * a.sin(),
        )
    }
}

pub fn to_polar(target: Point2, frame: &Pose2) -> PolarRef {
    let d = target - frame.position();
    let distance = d.norm();
    let bearing = if distance == 0.0 {
        0.0
    } else {
        normalize_angle(d.y.atan2(d.x) - frame.theta)
    };
    PolarRef { distance, bearing }
}
