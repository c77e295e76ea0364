//! Trajectory similarity and controller evaluation.

mod frechet;

pub use frechet::{
    deviation_aware_frechet, deviation_point, discrete_frechet, frechet_points, partial_frechet_curve,
    trajectory_frechet, EndpointMode, FrechetError, FrechetReport, DEFAULT_PHI, DEFAULT_SAMPLES,
};

use crate::exec::Execution;
use crate::geom::Scene;
use crate::learn::PolicyBundle;
use crate::perception::{Perception, StateVec};
use crate::sim::{
    run_episode, sample_episode, Action, Demonstration, EpisodeInit, EpisodeResult, HumanMode, ModeWeights, Outcome,
    SimConfig, SimError,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("unknown scene {0:?}")]
    UnknownScene(String),
    #[error("no scenarios")]
    Empty,
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScenarioKind {
    /// Scripted human, random start and goal.
    Mode { mode: HumanMode },
    /// Start, goal and human replay from a demonstration, jittered per rollout.
    Demo { demo: Box<Demonstration> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub scene_id: String,
    #[serde(flatten)]
    pub kind: ScenarioKind,
}

impl Scenario {
    pub fn mode(scene_id: &str, mode: HumanMode) -> Self {
        let tag = serde_json::to_value(mode).ok().and_then(|v| v.as_str().map(str::to_lowercase));
        Scenario {
            name: format!("{scene_id}/{}", tag.unwrap_or_default()),
            scene_id: scene_id.to_string(),
            kind: ScenarioKind::Mode { mode },
        }
    }

    pub fn demo(name: &str, demo: Demonstration) -> Self {
        Scenario {
            name: name.to_string(),
            scene_id: demo.scene_id.clone(),
            kind: ScenarioKind::Demo { demo: Box::new(demo) },
        }
    }

    pub fn human_mode(&self) -> HumanMode {
        match &self.kind {
            ScenarioKind::Mode { mode } => *mode,
            ScenarioKind::Demo { .. } => HumanMode::DemoReplay,
        }
    }

    fn init(&self, scene: &Scene, sim: &SimConfig, seed: u64) -> Result<EpisodeInit, SimError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut init = match &self.kind {
            ScenarioKind::Mode { mode } => sample_episode(scene, sim, &ModeWeights::only(*mode), &mut rng)?,
            ScenarioKind::Demo { demo } => demo.jittered_init(scene, sim, &mut rng),
        };
        init.seed = seed;
        Ok(init)
    }
}

/// One scenario per scripted human mode for each scene, plus one per demo.
pub fn default_scenarios(scenes: &[Scene], demos: &[(String, Demonstration)]) -> Vec<Scenario> {
    let mut out = Vec::new();
    for s in scenes {
        for m in HumanMode::EXPLORATION {
            out.push(Scenario::mode(s.id(), m));
        }
    }
    for (name, d) in demos {
        out.push(Scenario::demo(name, d.clone()));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrechetSummary {
    #[serde(rename = "F_full")]
    pub f_full: f64,
    pub t_star: f64,
    pub f_at_t_star: f64,
    pub reversed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutSummary {
    pub seed: u64,
    pub outcome: Outcome,
    pub steps: usize,
    #[serde(rename = "return")]
    pub return_: f64,
    pub frechet: Option<FrechetSummary>,
}

/// Median and quartiles (linear interpolation between order statistics).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
}

impl Spread {
    pub fn of(values: &[f64]) -> Option<Spread> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let h = p * (v.len() - 1) as f64;
            let (lo, hi) = (h.floor() as usize, h.ceil() as usize);
            v[lo] + (h - lo as f64) * (v[hi] - v[lo])
        };
        let (q1, q3) = (q(0.25), q(0.75));
        Some(Spread {
            median: q(0.5),
            q1,
            q3,
            iqr: q3 - q1,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub name: String,
    pub scene_id: String,
    pub human_mode: HumanMode,
    pub n: usize,
    pub success_rate: f64,
    pub collision_rate: f64,
    pub timeout_rate: f64,
    pub f_at_t_star: Option<Spread>,
    pub t_star: Option<Spread>,
    #[serde(rename = "F_full")]
    pub f_full: Option<Spread>,
    pub rollouts: Vec<RolloutSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub configuration: String,
    pub seed: u64,
    pub episodes_per_scenario: usize,
    pub success_rate: f64,
    pub collision_rate: f64,
    pub timeout_rate: f64,
    pub scenarios: Vec<ScenarioReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub configuration: String,
    pub episodes: usize,
    pub seed: u64,
    pub execution: Execution,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            configuration: "policy".into(),
            episodes: 50,
            seed: 0,
            execution: Execution::Parallel,
        }
    }
}

fn rollout_seed(seed: u64, scenario: usize, k: usize) -> u64 {
    let mut z = seed ^ (scenario as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (k as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic policy view of a trained bundle. A non-finite output is
/// passed through so the episode reports divergence.
pub fn greedy(bundle: &PolicyBundle) -> impl Fn(&StateVec) -> Action + Sync + '_ {
    move |s| match bundle.act_normalized(s.as_slice()) {
        Ok(u) => Action::from_normalized(u),
        Err(_) => Action::new(f64::NAN, f64::NAN),
    }
}

fn rate(outcomes: &[Outcome], o: Outcome) -> f64 {
    if outcomes.is_empty() {
        return 0.0;
    }
    outcomes.iter().filter(|&&x| x == o).count() as f64 / outcomes.len() as f64
}

fn summarize(seed: u64, res: &EpisodeResult, demo: Option<&Demonstration>) -> RolloutSummary {
    let frechet = demo.and_then(|d| {
        trajectory_frechet(&res.robot_traj, &d.robot, EndpointMode::Auto)
            .ok()
            .map(|r| FrechetSummary {
                f_full: r.f_full,
                t_star: r.t_star,
                f_at_t_star: r.f_at_t_star,
                reversed: r.reversed,
            })
    });
    RolloutSummary {
        seed,
        outcome: res.outcome,
        steps: res.steps,
        return_: res.return_,
        frechet,
    }
}

/// Runs `cfg.episodes` rollouts of `policy` per scenario. Each rollout has
/// its own seed derived from `cfg.seed`, so the report does not depend on
/// the execution strategy.
pub fn evaluate_controller(
    policy: &(dyn Fn(&StateVec) -> Action + Sync),
    perception: &Perception,
    scenes: &[Scene],
    scenarios: &[Scenario],
    sim: &SimConfig,
    cfg: &EvalConfig,
) -> Result<EvalReport, EvalError> {
    if scenarios.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut jobs = Vec::new();
    for (si, sc) in scenarios.iter().enumerate() {
        let scene = scenes
            .iter()
            .find(|s| s.id() == sc.scene_id)
            .ok_or_else(|| EvalError::UnknownScene(sc.scene_id.clone()))?;
        for k in 0..cfg.episodes {
            jobs.push((si, scene, rollout_seed(cfg.seed, si, k)));
        }
    }
    let results = cfg.execution.try_map(jobs, |(si, scene, seed)| {
        let sc = &scenarios[si];
        let init = sc.init(scene, sim, seed)?;
        let mut p = |s: &StateVec| policy(s);
        let (res, _) = run_episode(&mut p, scene, sim, &init, perception)?;
        let demo = match &sc.kind {
            ScenarioKind::Demo { demo } => Some(demo.as_ref()),
            ScenarioKind::Mode { .. } => None,
        };
        Ok::<_, SimError>((si, summarize(seed, &res, demo)))
    })?;

    let mut per: Vec<Vec<RolloutSummary>> = vec![Vec::new(); scenarios.len()];
    for (si, r) in results {
        per[si].push(r);
    }
    let mut all = Vec::new();
    let reports = scenarios
        .iter()
        .zip(per)
        .map(|(sc, rollouts)| {
            let outcomes: Vec<Outcome> = rollouts.iter().map(|r| r.outcome).collect();
            all.extend_from_slice(&outcomes);
            let fr: Vec<&FrechetSummary> = rollouts.iter().filter_map(|r| r.frechet.as_ref()).collect();
            let spread = |f: fn(&FrechetSummary) -> f64| Spread::of(&fr.iter().map(|x| f(x)).collect::<Vec<_>>());
            ScenarioReport {
                name: sc.name.clone(),
                scene_id: sc.scene_id.clone(),
                human_mode: sc.human_mode(),
                n: rollouts.len(),
                success_rate: rate(&outcomes, Outcome::Success),
                collision_rate: rate(&outcomes, Outcome::Collision),
                timeout_rate: rate(&outcomes, Outcome::Timeout),
                f_at_t_star: spread(|x| x.f_at_t_star),
                t_star: spread(|x| x.t_star),
                f_full: spread(|x| x.f_full),
                rollouts,
            }
        })
        .collect();
    Ok(EvalReport {
        configuration: cfg.configuration.clone(),
        seed: cfg.seed,
        episodes_per_scenario: cfg.episodes,
        success_rate: rate(&all, Outcome::Success),
        collision_rate: rate(&all, Outcome::Collision),
        timeout_rate: rate(&all, Outcome::Timeout),
        scenarios: reports,
    })
}

pub const RATES_HEADER: &str =
    "configuration,scenario,scene_id,human_mode,n,success_rate,collision_rate,timeout_rate,median_f_at_t_star,iqr_f_at_t_star";

pub fn rates_csv(reports: &[EvalReport]) -> String {
    let mut s = String::from(RATES_HEADER);
    s.push('\n');
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in reports {
        for sc in &r.scenarios {
            let mode = serde_json::to_value(sc.human_mode)
                .ok()
                .and_then(|v| v.as_str().map(String::from))
                .unwrap_or_default();
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                r.configuration,
                sc.name,
                sc.scene_id,
                mode,
                sc.n,
                sc.success_rate,
                sc.collision_rate,
                sc.timeout_rate,
                opt(sc.f_at_t_star.map(|x| x.median)),
                opt(sc.f_at_t_star.map(|x| x.iqr)),
            ));
        }
    }
    s
}

/// Writes `eval_report.json` and `eval_rates.csv` into `dir`.
pub fn write_reports(dir: &Path, reports: &[EvalReport]) -> Result<(), EvalError> {
    std::fs::create_dir_all(dir)?;
    let json = serde_json::to_vec_pretty(reports)?;
    crate::write_atomic(&dir.join("eval_report.json"), &json)?;
    crate::write_atomic(&dir.join("eval_rates.csv"), rates_csv(reports).as_bytes())?;
    Ok(())
}
