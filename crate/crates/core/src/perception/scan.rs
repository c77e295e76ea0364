use crate::geom::{Circle, Pose2, Scene};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Normalized 1D depth scan: `rays[i]` is the hit distance divided by
/// `max_range`, rays spanning the field of view from right (−fov/2) to
/// left (+fov/2).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthScan {
    pub rays: Vec<f64>,
    pub fov: f64,
    pub max_range: f64,
}

/// Bearing of ray `i` of `n` relative to the heading.
pub fn ray_angle(i: usize, n: usize, fov: f64) -> f64 {
    if n == 1 {
        0.0
    } else {
        -fov / 2.0 + fov * i as f64 / (n - 1) as f64
    }
}

/// Raycasts `rays` beams across `fov`; the human, if present, is an extra
/// disc obstacle.
pub fn render_scan(scene: &Scene, robot: &Pose2, human: Option<Circle>, fov: f64, rays: usize, max_range: f64) -> DepthScan {
    let discs: Vec<Circle> = human.into_iter().collect();
    let rays = (0..rays)
        .map(|i| scene.raycast(robot, ray_angle(i, rays, fov), max_range, &discs) / max_range)
        .collect();
    DepthScan { rays, fov, max_range }
}

/// Independently zeroes each ray with probability `p`.
pub fn corrupt(scan: &DepthScan, p: f64, rng: &mut impl Rng) -> DepthScan {
    let mut out = scan.clone();
    corrupt_in_place(&mut out.rays, p, rng);
    out
}

pub fn corrupt_in_place(rays: &mut [f64], p: f64, rng: &mut impl Rng) {
    let p = p.clamp(0.0, 1.0);
    for r in rays {
        if rng.random_bool(p) {
            *r = 0.0;
        }
    }
}
