use super::{Action, Episode, EpisodeInit, HumanTrack, Policy, SimConfig, SimError, Source, Termination, Transition, World};
use crate::geom::{normalize_angle, Point2, Pose2, Scene, Trajectory, TrajectorySample};
use crate::perception::{Perception, StateVec};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};
use std::path::Path;

/// Spacing of the densified demo path used for tracking and collision checks.
const DENSE_STEP: f64 = 0.02;
const MIN_SPEED: f64 = 0.1;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DemoMeta {
    #[serde(default)]
    pub author: String,
    #[serde(default)]
    pub note: String,
}

/// A drawn robot path, optionally with the human's recorded walk on the same
/// clock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Demonstration {
    pub scene_id: String,
    pub robot: Trajectory,
    pub human: Option<Trajectory>,
    #[serde(default)]
    pub meta: DemoMeta,
}

impl Demonstration {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SimError::InvalidEpisode(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| SimError::InvalidEpisode(format!("{}: {e}", path.display())))
    }

    /// The goal is the last drawn point.
    pub fn goal(&self) -> Point2 {
        self.robot.last().pose.position()
    }

    /// Episode setup for replaying this demonstration: the robot starts on the
    /// first point facing along the path, the human follows its recording.
    pub fn episode_init(&self) -> EpisodeInit {
        let pts = self.robot.points();
        let start = pts[0];
        let ahead = pts.iter().find(|p| p.dist(start) > 0.1).copied().unwrap_or(pts[pts.len() - 1]);
        let d = ahead - start;
        let t0 = self.robot.first().t;
        let human = match &self.human {
            Some(h) => {
                let shifted = h
                    .samples()
                    .iter()
                    .map(|s| TrajectorySample { t: s.t - t0, pose: s.pose })
                    .collect();
                HumanTrack::replay(Trajectory::new(shifted).expect("shift keeps order"))
            }
            None => HumanTrack::absent(),
        };
        EpisodeInit {
            scene_id: self.scene_id.clone(),
            robot_start: Pose2::new(start.x, start.y, d.y.atan2(d.x)),
            goal: self.goal(),
            human,
            seed: 0,
        }
    }

    /// Demo scenario with the robot start perturbed by up to 5 cm and 5°,
    /// for repeated seeded rollouts. Falls back to the exact start when the
    /// perturbed one collides.
    pub fn jittered_init(&self, scene: &Scene, cfg: &SimConfig, rng: &mut impl Rng) -> EpisodeInit {
        let mut init = self.episode_init();
        let p = init.robot_start;
        let jittered = Pose2::new(
            p.x + rng.random_range(-0.05..=0.05),
            p.y + rng.random_range(-0.05..=0.05),
            p.theta + rng.random_range(-5.0..=5.0f64).to_radians(),
        );
        if !scene.disc_collides(jittered.position(), cfg.robot_radius) {
            init.robot_start = jittered;
        }
        init.seed = rng.random();
        init
    }
}

/// Controller replay of a demonstration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackedDemo {
    pub init: EpisodeInit,
    pub actions: Vec<Action>,
    pub replay: Trajectory,
    /// Largest distance between the replay and the drawn path.
    pub max_deviation: f64,
}

/// Plays back a fixed action sequence, then stands still.
#[derive(Debug, Clone)]
pub struct DemoReplay {
    actions: Vec<Action>,
    next: usize,
}

impl DemoReplay {
    pub fn new(actions: Vec<Action>) -> Self {
        Self { actions, next: 0 }
    }
}

impl Policy for DemoReplay {
    fn act(&mut self, _: &StateVec) -> Action {
        let a = self.actions.get(self.next).copied().unwrap_or_default();
        self.next += 1;
        a
    }
}

struct DensePath {
    points: Vec<Point2>,
    /// Drawn speed at each dense point.
    speed: Vec<f64>,
}

impl DensePath {
    fn new(traj: &Trajectory) -> Self {
        let s = traj.samples();
        let mut points = vec![s[0].pose.position()];
        let mut speed = Vec::new();
        for w in s.windows(2) {
            let (a, b) = (w[0].pose.position(), w[1].pose.position());
            let len = a.dist(b);
            let v = len / (w[1].t - w[0].t);
            let n = (len / DENSE_STEP).ceil().max(1.0) as usize;
            for k in 1..=n {
                points.push(a.lerp(b, k as f64 / n as f64));
                speed.push(v);
            }
        }
        speed.push(*speed.last().unwrap_or(&0.0));
        Self { points, speed }
    }

    /// Nearest dense index at or after `from` within a forward search window,
    /// so that self-crossing paths are followed in order.
    fn nearest(&self, p: Point2, from: usize) -> usize {
        let hi = (from + (1.0 / DENSE_STEP) as usize).min(self.points.len() - 1);
        (from..=hi)
            .min_by(|&a, &b| self.points[a].dist(p).total_cmp(&self.points[b].dist(p)))
            .unwrap_or(from)
    }

    fn distance(&self, p: Point2) -> f64 {
        let mut best = f64::INFINITY;
        for w in self.points.windows(2) {
            let d = w[1] - w[0];
            let l2 = d.dot(d);
            let s = if l2 > 0.0 { ((p - w[0]).dot(d) / l2).clamp(0.0, 1.0) } else { 0.0 };
            best = best.min(w[0].lerp(w[1], s).dist(p));
        }
        best
    }
}

/// Pure-pursuit command toward `target` at nominal speed `v`. Targets more
/// than 90° off the heading are turned toward in place.
pub fn pure_pursuit(pose: &Pose2, target: Point2, v: f64, dt: f64) -> Action {
    let d = target - pose.position();
    let ld = d.norm();
    if ld < 1e-9 {
        return Action::new(0.0, 0.0);
    }
    let alpha = normalize_angle(d.y.atan2(d.x) - pose.theta);
    if alpha.abs() > FRAC_PI_2 {
        // turn in place without overshooting the bearing
        return Action::new(0.0, (alpha / dt).clamp(-PI, PI));
    }
    let kappa = 2.0 * alpha.sin() / ld;
    let mut v = v;
    if (v * kappa).abs() > PI {
        v = PI / kappa.abs();
    }
    Action::new(v, v * kappa)
}

/// Converts a drawn demonstration into controller actions by pure pursuit
/// along the densified path, replaying the human track alongside.
pub fn track_demo(demo: &Demonstration, scene: &Scene, cfg: &SimConfig) -> Result<TrackedDemo, SimError> {
    if demo.scene_id != scene.id() {
        return Err(SimError::SceneMismatch {
            expected: demo.scene_id.clone(),
            got: scene.id().to_string(),
        });
    }
    let path = DensePath::new(&demo.robot);
    if let Some(p) = path.points.iter().find(|p| scene.disc_collides(**p, cfg.robot_radius)) {
        return Err(SimError::InvalidDemonstration { at: [p.x, p.y] });
    }
    let init = demo.episode_init();
    let mut long = cfg.clone();
    long.max_steps = 5 * cfg.max_steps;
    let mut world = World::new(scene, &long, &init)?;
    if world.in_collision() {
        let p = world.robot().position();
        return Err(SimError::InvalidDemonstration { at: [p.x, p.y] });
    }
    let look = (cfg.lookahead / DENSE_STEP).round() as usize;
    let last = path.points.len() - 1;
    let mut idx = 0;
    let mut actions = Vec::new();
    let mut samples = vec![TrajectorySample { t: 0.0, pose: world.robot() }];
    let mut max_dev: f64 = 0.0;
    loop {
        let pose = world.robot();
        idx = path.nearest(pose.position(), idx);
        let target = path.points[(idx + look).min(last)];
        let v = path.speed[idx].clamp(MIN_SPEED, super::V_MAX);
        let a = pure_pursuit(&pose, target, v, cfg.dt);
        actions.push(a);
        let term = world.step(a);
        let p = world.robot().position();
        samples.push(TrajectorySample { t: world.time(), pose: world.robot() });
        let dev = path.distance(p);
        max_dev = max_dev.max(dev);
        if dev > cfg.max_tracking_error {
            return Err(SimError::Untrackable { at: [p.x, p.y], deviation: dev });
        }
        match term {
            None => {}
            Some(Termination::Goal) => break,
            Some(Termination::Collision) => return Err(SimError::InvalidDemonstration { at: [p.x, p.y] }),
            Some(Termination::Timeout) => return Err(SimError::Untrackable { at: [p.x, p.y], deviation: dev }),
        }
    }
    Ok(TrackedDemo {
        init,
        actions,
        replay: Trajectory::new(samples)?,
        max_deviation: max_dev,
    })
}

/// Tracks `demo` and replays the actions through the episode engine with
/// demonstration rewards. The last transition carries the demo goal reward.
pub fn demo_to_transitions(
    demo: &Demonstration,
    scene: &Scene,
    cfg: &SimConfig,
    perception: &Perception,
) -> Result<(TrackedDemo, Vec<Transition>), SimError> {
    let tracked = track_demo(demo, scene, cfg)?;
    let mut long = cfg.clone();
    long.max_steps = 5 * cfg.max_steps;
    let mut ep = Episode::new(scene, &long, &tracked.init, perception, Source::Demo)?;
    let mut out = Vec::with_capacity(tracked.actions.len());
    for &a in &tracked.actions {
        out.push(ep.step(a)?);
    }
    debug_assert!(ep.is_done());
    Ok((tracked, out))
}
