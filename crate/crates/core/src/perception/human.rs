use crate::geom::{to_polar, PolarRef, Point2, Pose2, Scene};
use serde::{Deserialize, Serialize};

/// What the robot knows about the human this step. When `k_h` is 0 the
/// pose fields hold the sentinel (−1, 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HumanObservation {
    pub k_h: u8,
    pub d_h: f64,
    pub dalpha_h: f64,
}

impl HumanObservation {
    pub const ABSENT: HumanObservation = HumanObservation {
        k_h: 0,
        d_h: -1.0,
        dalpha_h: 0.0,
    };

    pub fn visible(&self) -> bool {
        self.k_h == 1
    }

    pub fn polar(&self) -> PolarRef {
        PolarRef {
            distance: self.d_h,
            bearing: self.dalpha_h,
        }
    }
}

/// The human is detected when it lies within range and the angular field of
/// view, and the sight line to its center crosses no obstacle.
pub fn detect_human(scene: &Scene, robot: &Pose2, human: Option<Point2>, fov: f64, max_range: f64) -> HumanObservation {
    let Some(h) = human else {
        return HumanObservation::ABSENT;
    };
    let p = to_polar(h, robot);
    if p.distance > max_range || p.bearing.abs() > fov / 2.0 {
        return HumanObservation::ABSENT;
    }
    if p.distance > 0.0 && scene.raycast(robot, p.bearing, p.distance, &[]) < p.distance {
        return HumanObservation::ABSENT;
    }
    HumanObservation {
        k_h: 1,
        d_h: p.distance,
        dalpha_h: p.bearing,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::SceneFile;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const FOV: f64 = 87.0 * std::f64::consts::PI / 180.0;

    fn walled() -> Scene {
        Scene::new(SceneFile {
            id: "walled".into(),
            bounds: [0.0, 0.0, 10.0, 10.0],
            polygons: vec![
                vec![[4.0, 3.0], [4.3, 3.0], [4.3, 7.0], [4.0, 7.0]],
                vec![[6.0, 1.0], [7.0, 1.5], [6.5, 2.5]],
            ],
            circles: vec![crate::geom::Circle { c: [2.0, 8.0], r: 0.6 }],
            spawn_region: vec![[0.0, 0.0], [10.0, 0.0], [10.0, 10.0], [0.0, 10.0]],
        })
        .unwrap()
    }

    #[test]
    fn documented_cases() {
        let scene = walled();
        assert_eq!(detect_human(&scene, &Pose2::new(1.0, 5.0, 0.0), None, FOV, 6.0), HumanObservation::ABSENT);
        let o = detect_human(&scene, &Pose2::new(1.0, 5.0, 0.0), Some(Point2::new(3.0, 5.0)), FOV, 6.0);
        assert_eq!(o.k_h, 1);
        assert_abs_diff_eq!(o.d_h, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(o.dalpha_h, 0.0, epsilon = 1e-12);
        // behind the wall at x∈[4, 4.3]
        let o = detect_human(&scene, &Pose2::new(1.0, 5.0, 0.0), Some(Point2::new(5.5, 5.0)), FOV, 6.0);
        assert_eq!(o, HumanObservation::ABSENT);
        // out of FOV and out of range
        assert!(!detect_human(&scene, &Pose2::new(1.0, 5.0, 0.0), Some(Point2::new(1.0, 7.0)), FOV, 6.0).visible());
        assert!(!detect_human(&scene, &Pose2::new(1.0, 1.0, 0.0), Some(Point2::new(9.5, 1.0)), FOV, 6.0).visible());
    }

    /// Independent oracle: bearing via atan2 of the relative vector, and the
    /// sight line marched in 1 mm steps against point-in-obstacle.
    fn oracle(scene: &Scene, robot: &Pose2, h: Point2, fov: f64) -> bool {
        let (dx, dy) = (h.x - robot.x, h.y - robot.y);
        let d = dx.hypot(dy);
        if d > 6.0 {
            return false;
        }
        let mut rel = dy.atan2(dx) - robot.theta;
        while rel > std::f64::consts::PI {
            rel -= 2.0 * std::f64::consts::PI;
        }
        while rel <= -std::f64::consts::PI {
            rel += 2.0 * std::f64::consts::PI;
        }
        if rel.abs() > fov / 2.0 {
            return false;
        }
        let steps = (d / 1e-3).ceil() as usize;
        (0..steps).all(|k| {
            let s = k as f64 / steps as f64;
            !scene.point_in_obstacle(Point2::new(robot.x + dx * s, robot.y + dy * s))
        })
    }

    #[test]
    fn agrees_with_marching_oracle() {
        let scene = walled();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut visible = 0;
        let mut disagreements = 0;
        let trials = 10_000;
        for _ in 0..trials {
            let free = |rng: &mut ChaCha8Rng| loop {
                let p = Point2::new(rng.random_range(0.05..9.95), rng.random_range(0.05..9.95));
                if !scene.point_in_obstacle(p) {
                    return p;
                }
            };
            let r = free(&mut rng);
            let h = free(&mut rng);
            let robot = Pose2::new(r.x, r.y, rng.random_range(-3.2..3.2));
            for fov in [FOV, 120f64.to_radians()] {
                let got = detect_human(&scene, &robot, Some(h), fov, 6.0);
                if got.visible() {
                    visible += 1;
                    assert_eq!(got.polar(), to_polar(h, &robot));
                } else {
                    assert_eq!(got, HumanObservation::ABSENT);
                }
                if got.visible() != oracle(&scene, &robot, h, fov) {
                    disagreements += 1;
                }
            }
        }
        // a 1 mm march can only miss obstacle slivers thinner than its step
        assert!(disagreements <= 2, "{disagreements} disagreements");
        assert!(visible > 1000);
    }
}
