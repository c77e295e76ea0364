use super::{compute_reward, Action, EpisodeInit, RewardEvent, SimConfig, SimError, Source, Termination, World};
use crate::geom::{Pose2, Scene, Trajectory, TrajectorySample};
use crate::perception::{Observation, Perception, PerceptionSession, StateVec};
use serde::{Deserialize, Serialize};

/// Maps a state to a velocity command.
pub trait Policy {
    fn act(&mut self, state: &StateVec) -> Action;
}

impl<F: FnMut(&StateVec) -> Action> Policy for F {
    fn act(&mut self, state: &StateVec) -> Action {
        self(state)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub s: StateVec,
    pub a: Action,
    pub r: f64,
    pub s_next: StateVec,
    pub done: bool,
    pub source: Source,
    pub event: RewardEvent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Outcome {
    Success,
    Collision,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub outcome: Outcome,
    pub robot_traj: Trajectory,
    pub human_traj: Option<Trajectory>,
    /// Discounted return `Σ γ^i r_i`.
    pub return_: f64,
    pub steps: usize,
    /// Whether the human was detected in the observation preceding step `i`.
    pub human_in_fov_mask: Vec<bool>,
    pub rewards: Vec<f64>,
}

/// Step-wise episode driver combining the world, perception and rewards.
pub struct Episode<'a> {
    world: World<'a>,
    session: PerceptionSession<'a>,
    source: Source,
    obs: Observation,
    robot_samples: Vec<TrajectorySample>,
    mask: Vec<bool>,
    rewards: Vec<f64>,
    return_: f64,
    outcome: Option<Outcome>,
}

impl<'a> Episode<'a> {
    pub fn new(
        scene: &'a Scene,
        cfg: &'a SimConfig,
        init: &'a EpisodeInit,
        perception: &'a Perception,
        source: Source,
    ) -> Result<Self, SimError> {
        let world = World::new(scene, cfg, init)?;
        let mut session = perception.session();
        let obs = session.observe(scene, &world.robot(), world.human_disc(), init.goal, [0.0, 0.0])?;
        Ok(Self {
            robot_samples: vec![TrajectorySample {
                t: 0.0,
                pose: world.robot(),
            }],
            world,
            session,
            source,
            obs,
            mask: Vec::new(),
            rewards: Vec::new(),
            return_: 0.0,
            outcome: None,
        })
    }

    pub fn state(&self) -> &StateVec {
        &self.obs.state
    }

    pub fn world(&self) -> &World<'a> {
        &self.world
    }

    pub fn is_done(&self) -> bool {
        self.outcome.is_some()
    }

    pub fn steps(&self) -> usize {
        self.world.steps()
    }

    pub fn robot(&self) -> Pose2 {
        self.world.robot()
    }

    /// Applies `a` (clamped into the control limits) for one period.
    pub fn step(&mut self, a: Action) -> Result<Transition, SimError> {
        if self.outcome.is_some() {
            return Err(SimError::Finished);
        }
        if !a.is_finite() {
            return Err(SimError::PolicyDivergence);
        }
        let a = Action::new(a.v, a.omega);
        let i = self.world.steps();
        self.mask.push(self.obs.human.visible());
        let term = self.world.step(a);
        let next = self.session.observe(
            self.world.scene(),
            &self.world.robot(),
            self.world.human_disc(),
            self.world.init().goal,
            a.as_array(),
        )?;
        let event = match term {
            Some(Termination::Collision) => RewardEvent::Collision,
            Some(Termination::Goal) => match self.source {
                Source::Experience => RewardEvent::GoalTraining,
                Source::Demo => RewardEvent::GoalDemo,
            },
            Some(Termination::Timeout) => RewardEvent::Timeout,
            None => RewardEvent::None,
        };
        let r = compute_reward(event, self.source);
        self.return_ += self.world.config().gamma.powi(i as i32) * r;
        self.rewards.push(r);
        self.robot_samples.push(TrajectorySample {
            t: self.world.time(),
            pose: self.world.robot(),
        });
        self.outcome = term.map(|t| match t {
            Termination::Collision => Outcome::Collision,
            Termination::Goal => Outcome::Success,
            Termination::Timeout => Outcome::Timeout,
        });
        let s = std::mem::replace(&mut self.obs, next);
        Ok(Transition {
            s: s.state,
            a,
            r,
            s_next: self.obs.state.clone(),
            done: term.is_some(),
            source: self.source,
            event,
        })
    }

    /// Summary of a finished episode.
    pub fn finish(self) -> Result<EpisodeResult, SimError> {
        let outcome = self
            .outcome
            .ok_or_else(|| SimError::InvalidEpisode("episode has not terminated".into()))?;
        let times: Vec<f64> = self.robot_samples.iter().map(|s| s.t).collect();
        Ok(EpisodeResult {
            outcome,
            human_traj: self.world.init().human.trajectory(&times),
            robot_traj: Trajectory::new(self.robot_samples)?,
            return_: self.return_,
            steps: self.world.steps(),
            human_in_fov_mask: self.mask,
            rewards: self.rewards,
        })
    }
}

/// Runs `policy` from `init` until termination.
pub fn run_episode(
    policy: &mut dyn Policy,
    scene: &Scene,
    cfg: &SimConfig,
    init: &EpisodeInit,
    perception: &Perception,
) -> Result<(EpisodeResult, Vec<Transition>), SimError> {
    let mut ep = Episode::new(scene, cfg, init, perception, Source::Experience)?;
    let mut transitions = Vec::new();
    while !ep.is_done() {
        let a = policy.act(ep.state());
        transitions.push(ep.step(a)?);
    }
    Ok((ep.finish()?, transitions))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::scene::tests::room;
    use crate::geom::Point2;
    use crate::perception::pipeline::tests::untrained;
    use crate::perception::{HumanObservation, Variant};
    use crate::sim::{sample_episode, HumanTrack, ModeWeights};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn init(start: Pose2, goal: Point2) -> EpisodeInit {
        EpisodeInit {
            scene_id: "room".into(),
            robot_start: start,
            goal,
            human: HumanTrack::absent(),
            seed: 0,
        }
    }

    #[test]
    fn standing_still_times_out() {
        let scene = room(8.0, 8.0);
        let cfg = SimConfig::default();
        let p = untrained(Variant::VaeHa, 1);
        let ini = init(Pose2::new(2.0, 2.0, 0.0), Point2::new(6.0, 6.0));
        let (res, tr) = run_episode(&mut |_: &StateVec| Action::new(0.0, 0.0), &scene, &cfg, &ini, &p).unwrap();
        assert_eq!(res.outcome, Outcome::Timeout);
        assert_eq!(res.steps, 150);
        assert_eq!(tr.len(), 150);
        assert!((res.return_ + 2.5 * 0.99f64.powi(149)).abs() < 1e-12);
        assert!(tr[..149].iter().all(|t| !t.done && t.r == 0.0));
        assert!(tr[149].done);
        // no human: every flag false, every state carries the sentinel
        assert!(res.human_in_fov_mask.iter().all(|f| !f));
        assert!(tr.iter().all(|t| t.s.human() == HumanObservation::ABSENT));
        assert!(res.human_traj.is_none());
    }

    #[test]
    fn near_goal_succeeds_at_first_step() {
        let scene = room(8.0, 8.0);
        let cfg = SimConfig::default();
        let p = untrained(Variant::VaeHa, 1);
        let ini = init(Pose2::new(2.0, 2.0, 0.0), Point2::new(2.2, 2.0));
        let (res, tr) = run_episode(&mut |_: &StateVec| Action::new(0.0, 0.0), &scene, &cfg, &ini, &p).unwrap();
        assert_eq!(res.outcome, Outcome::Success);
        assert_eq!(res.steps, 1);
        assert_eq!(tr[0].event, RewardEvent::GoalTraining);
        assert_eq!(res.return_, 5.0);
    }

    #[test]
    fn driving_into_wall_collides_on_schedule() {
        // wall at x = 8, robot 1 m away facing it
        let scene = room(8.0, 8.0);
        let cfg = SimConfig::default();
        let p = untrained(Variant::VaeHa, 1);
        let ini = init(Pose2::new(7.0, 4.0, 0.0), Point2::new(5.0, 1.0));
        let (res, _) = run_episode(&mut |_: &StateVec| Action::new(0.5, 0.0), &scene, &cfg, &ini, &p).unwrap();
        assert_eq!(res.outcome, Outcome::Collision);
        let bound = ((1.0 - cfg.robot_radius) / (0.5 * cfg.dt)).ceil() as usize;
        assert!(res.steps <= bound, "{} > {bound}", res.steps);
        assert_eq!(res.steps, bound);
        assert_eq!(*res.rewards.last().unwrap(), -5.0);
    }

    #[test]
    fn nan_action_is_divergence() {
        let scene = room(8.0, 8.0);
        let cfg = SimConfig::default();
        let p = untrained(Variant::VaeHa, 1);
        let ini = init(Pose2::new(2.0, 2.0, 0.0), Point2::new(6.0, 6.0));
        let r = run_episode(&mut |_: &StateVec| Action::new(f64::NAN, 0.0), &scene, &cfg, &ini, &p);
        assert!(matches!(r, Err(SimError::PolicyDivergence)));
    }

    #[test]
    fn random_episodes_account_and_repeat() {
        let scene = room(8.0, 8.0);
        let cfg = SimConfig::default();
        let p = untrained(Variant::LstmHp, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let ini = sample_episode(&scene, &cfg, &ModeWeights::default(), &mut rng).unwrap();
            let run = || {
                let mut r = ChaCha8Rng::seed_from_u64(ini.seed);
                let mut pol = |_: &StateVec| Action::new(r.random_range(0.0..0.5), r.random_range(-1.0..1.0));
                run_episode(&mut pol, &scene, &cfg, &ini, &p).unwrap()
            };
            let (a, ta) = run();
            let (b, tb) = run();
            assert_eq!(a, b);
            assert_eq!(ta, tb);
            let horner = ta.iter().rev().fold(0.0, |acc, t| t.r + 0.99 * acc);
            assert!((a.return_ - horner).abs() < 1e-12);
            assert_eq!(ta.iter().filter(|t| t.done).count(), 1);
            assert!(ta.last().unwrap().done);
            assert!(ta.iter().all(|t| t.a.v >= 0.0));
            assert_eq!(a.human_in_fov_mask.len(), a.steps);
            assert_eq!(a.robot_traj.len(), a.steps + 1);
            for (t, seen) in ta.iter().zip(&a.human_in_fov_mask) {
                assert_eq!(t.s.human().visible(), *seen);
            }
        }
    }
}
