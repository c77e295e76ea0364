use super::{ActorStats, Batch, CriticStats, LearnError, PolicyBundle, ReplayBuffer, Td3Config};
use crate::geom::Scene;
use crate::perception::Perception;
use crate::sim::{
    demo_to_transitions, sample_episode, Action, Demonstration, Episode, EpisodeInit, ModeWeights, Outcome, SimConfig,
    Source, Transition,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// One line of the training CSV, written per finished episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLogRow {
    pub step: usize,
    pub episode: usize,
    #[serde(rename = "return")]
    pub return_: f64,
    pub outcome: Outcome,
    pub critic_loss: f64,
    pub actor_loss: f64,
    pub bc_loss: f64,
    pub q_mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainProgress {
    pub step: usize,
    pub episode: usize,
    pub scene_id: String,
    pub row: TrainLogRow,
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub bundle: PolicyBundle,
    pub log: Vec<TrainLogRow>,
    pub experience: ReplayBuffer,
    pub demo: ReplayBuffer,
    /// Scene used by each training episode after warmup.
    pub scene_schedule: Vec<String>,
}

/// Replays every demonstration through the matching scene.
pub fn load_demo_transitions(
    demos: &[Demonstration],
    scenes: &[Scene],
    sim: &SimConfig,
    perception: &Perception,
) -> Result<Vec<Transition>, LearnError> {
    let mut out = Vec::new();
    for d in demos {
        let scene = scenes
            .iter()
            .find(|s| s.id() == d.scene_id)
            .ok_or_else(|| LearnError::Config(format!("demo refers to unknown scene {:?}", d.scene_id)))?;
        out.extend(demo_to_transitions(d, scene, sim, perception)?.1);
    }
    Ok(out)
}

#[derive(Default)]
struct Running {
    critic: Vec<CriticStats>,
    actor: Vec<ActorStats>,
}

impl Running {
    fn row(&mut self, step: usize, episode: usize, return_: f64, outcome: Outcome) -> TrainLogRow {
        let mean = |v: &mut dyn Iterator<Item = f64>, n: usize| if n == 0 { 0.0 } else { v.sum::<f64>() / n as f64 };
        let (nc, na) = (self.critic.len(), self.actor.len());
        let row = TrainLogRow {
            step,
            episode,
            return_,
            outcome,
            critic_loss: mean(&mut self.critic.iter().map(|c| 0.5 * (c.loss1 + c.loss2)), nc),
            actor_loss: mean(&mut self.actor.iter().map(|a| a.actor_loss), na),
            bc_loss: mean(&mut self.actor.iter().map(|a| a.bc_loss), na),
            q_mean: mean(&mut self.critic.iter().map(|c| c.q_mean), nc),
        };
        self.critic.clear();
        self.actor.clear();
        row
    }
}

fn random_action(rng: &mut impl Rng) -> Action {
    Action::from_normalized([rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)])
}

/// TD3+BC training. Warmup fills the experience buffer with random-action
/// transitions; afterwards every environment step runs one critic update and
/// every `policy_delay`-th also an actor update. Scenes rotate every
/// `scene_rotation` episodes. `on_episode` sees every finished episode.
#[allow(clippy::too_many_arguments)]
pub fn train(
    cfg: &Td3Config,
    sim: &SimConfig,
    perception: &Perception,
    scenes: &[Scene],
    demos: &[Demonstration],
    on_episode: &mut dyn FnMut(&TrainProgress, &PolicyBundle) -> Result<(), LearnError>,
) -> Result<TrainOutcome, LearnError> {
    cfg.validate()?;
    if scenes.is_empty() {
        return Err(LearnError::Config("no scenes".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let demo = if cfg.lambda_bc > 0.0 {
        let t = load_demo_transitions(demos, scenes, sim, perception)?;
        if t.is_empty() {
            return Err(LearnError::NoDemos);
        }
        ReplayBuffer::demo(t)
    } else {
        ReplayBuffer::demo(Vec::new())
    };
    let mut bundle = PolicyBundle::new(perception.state_dim(), cfg.clone(), &mut rng);
    let mut exp = ReplayBuffer::experience(cfg.buffer_capacity);
    let weights = ModeWeights::default();

    // warmup
    let mut w = 0;
    while exp.len() < cfg.warmup {
        let scene = &scenes[w % scenes.len()];
        w += 1;
        let init = sample_episode(scene, sim, &weights, &mut rng)?;
        let mut ep = Episode::new(scene, sim, &init, perception, Source::Experience)?;
        while !ep.is_done() && exp.len() < cfg.warmup {
            exp.push(ep.step(random_action(&mut rng))?);
        }
    }

    let mut step = exp.len();
    let mut episode = 0;
    let mut log = Vec::new();
    let mut schedule = Vec::new();
    let mut running = Running::default();
    while step < cfg.total_steps {
        let scene = &scenes[(episode / cfg.scene_rotation) % scenes.len()];
        let scene_demos: Vec<&Demonstration> = demos.iter().filter(|d| d.scene_id == scene.id()).collect();
        let init: EpisodeInit = if !scene_demos.is_empty() && rng.random_bool(cfg.demo_episode_prob) {
            scene_demos[rng.random_range(0..scene_demos.len())].jittered_init(scene, sim, &mut rng)
        } else {
            sample_episode(scene, sim, &weights, &mut rng)?
        };
        schedule.push(scene.id().to_string());
        let mut ep = Episode::new(scene, sim, &init, perception, Source::Experience)?;
        while !ep.is_done() && step < cfg.total_steps {
            let a = bundle.select_action(ep.state().as_slice(), true, &mut rng)?;
            exp.push(ep.step(a)?);
            step += 1;

            let be = Batch::new(&exp.sample(cfg.batch_e, &mut rng));
            let bd = (!demo.is_empty()).then(|| Batch::new(&demo.sample(cfg.batch_d, &mut rng)));
            let critic_batch = match &bd {
                Some(d) => be.concat(d),
                None => be.clone(),
            };
            let noise = bundle.target_noise(critic_batch.len(), &mut rng);
            let cs = bundle.critic_update(&critic_batch, noise.view())?;
            if !(cs.q_max_abs <= cfg.q_limit) {
                return Err(LearnError::Divergence {
                    step: step as u64,
                    q: cs.q_max_abs,
                });
            }
            running.critic.push(cs);
            if bundle.actor_due() {
                running.actor.push(bundle.actor_update(&be, bd.as_ref())?);
            }
        }
        if !ep.is_done() {
            break;
        }
        let res = ep.finish()?;
        let row = running.row(step, episode, res.return_, res.outcome);
        log::debug!("episode {episode} step {step} {:?} return {:.3}", res.outcome, res.return_);
        let progress = TrainProgress {
            step,
            episode,
            scene_id: scene.id().to_string(),
            row: row.clone(),
        };
        log.push(row);
        on_episode(&progress, &bundle)?;
        episode += 1;
    }
    Ok(TrainOutcome {
        bundle,
        log,
        experience: exp,
        demo,
        scene_schedule: schedule,
    })
}

pub fn write_log_csv<W: std::io::Write>(w: W, rows: &[TrainLogRow]) -> Result<(), LearnError> {
    let mut w = w;
    writeln!(w, "step,episode,return,outcome,critic_loss,actor_loss,bc_loss,q_mean")?;
    for r in rows {
        let outcome = serde_json::to_value(r.outcome).map_err(|e| LearnError::Config(e.to_string()))?;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.step,
            r.episode,
            r.return_,
            outcome.as_str().unwrap_or_default(),
            r.critic_loss,
            r.actor_loss,
            r.bc_loss,
            r.q_mean
        )?;
    }
    Ok(())
}
