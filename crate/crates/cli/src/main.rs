//! `prefnav`: dataset generation, model and policy training, rollouts,
//! evaluation, Fréchet analysis and the local service.
//!
//! Exit status: 0 on success, 1 on usage errors, 2 on runtime errors.

mod config;

use clap::{Args, Parser, Subcommand};
use config::{apply, write_snapshot, RunConfig};
use prefnav_core::artifacts::{
    data_root, fit_predictor, fit_vae, load_demos, load_policy, load_scenes, save_policy, PerceptionBundle,
};
use prefnav_core::eval::{
    default_scenarios, evaluate_controller, greedy, trajectory_frechet, write_reports,
    EndpointMode, EvalConfig, Scenario,
};
use prefnav_core::exec::{with_workers, Execution};
use prefnav_core::geom::{Scene, Trajectory};
use prefnav_core::learn::{train, write_log_csv};
use prefnav_core::nn::Checkpoint;
use prefnav_core::perception::dataset::{dataset_stats, generate_dataset, read_jsonl, write_jsonl};
use prefnav_core::perception::{Perception, PerceptionConfig, Phase, Predictor, Vae, Variant};
use prefnav_core::sim::log::write_log;
use prefnav_core::sim::{run_episode, sample_episode, Demonstration, HumanMode, ModeWeights};
use rand::SeedableRng;
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Debug)]
enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    fn runtime(e: impl std::fmt::Display) -> Self {
        CliError::Runtime(e.to_string())
    }
}

type CliResult<T = ()> = Result<T, CliError>;

#[derive(Parser)]
#[command(name = "prefnav", version, about = "Personalized robot navigation from demonstrations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Record depth-scan frames from scripted episodes.
    GenDataset(GenDataset),
    /// Train the scan autoencoder on a frame dataset.
    TrainVae(TrainVae),
    /// Train the next-step predictor on a frame dataset.
    TrainPredictor(TrainPredictor),
    /// Train a navigation policy with TD3, plus behavioral cloning when demos are given.
    TrainPolicy(TrainPolicy),
    /// Run one seeded episode with a trained policy.
    Rollout(Rollout),
    /// Success, collision and timeout rates plus Fréchet statistics.
    Evaluate(Evaluate),
    /// Deviation-aware Fréchet analysis of two trajectories.
    Frechet(Frechet),
    /// Serve scenes, demos, rollouts and policies over local HTTP.
    Serve(Serve),
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; flags take precedence over it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed for every random choice of the run.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GenDataset {
    #[command(flatten)]
    common: Common,
    /// Scene file or directory [default: $PREFNAV_DATA_DIR/scenes].
    #[arg(long)]
    scene: Option<PathBuf>,
    /// Number of frames.
    #[arg(long)]
    n: Option<usize>,
    /// Observation layout to record, which fixes the field of view.
    #[arg(long, default_value = "vae-ha")]
    variant: Variant,
}

#[derive(Args)]
struct TrainVae {
    #[command(flatten)]
    common: Common,
    /// Frame dataset written by gen-dataset.
    #[arg(long)]
    dataset: PathBuf,
    /// Training epochs.
    #[arg(long)]
    epochs: Option<usize>,
}

#[derive(Args)]
struct TrainPredictor {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    dataset: PathBuf,
    /// VAE checkpoint used to encode the frames.
    #[arg(long)]
    vae: PathBuf,
    #[arg(long)]
    epochs: Option<usize>,
}

#[derive(Args)]
struct TrainPolicy {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    variant: Variant,
    /// Scene file or directory [default: $PREFNAV_DATA_DIR/scenes].
    #[arg(long)]
    scene: Option<PathBuf>,
    /// Demonstration file or directory [default: $PREFNAV_DATA_DIR/demos].
    #[arg(long)]
    demos: Option<PathBuf>,
    /// Train without demonstrations (plain TD3).
    #[arg(long)]
    no_demos: bool,
    #[arg(long)]
    vae: PathBuf,
    /// Predictor checkpoint, required by lstm-hp.
    #[arg(long)]
    predictor: Option<PathBuf>,
    /// Environment steps including warmup.
    #[arg(long)]
    steps: Option<usize>,
    /// Hidden layer widths, comma separated.
    #[arg(long, value_delimiter = ',')]
    hidden: Option<Vec<usize>>,
}

#[derive(Args)]
struct Rollout {
    #[command(flatten)]
    common: Common,
    /// Policy checkpoint.
    #[arg(long)]
    policy: PathBuf,
    /// Scene file or directory [default: $PREFNAV_DATA_DIR/scenes].
    #[arg(long)]
    scene: Option<PathBuf>,
    /// Scene id when --scene holds several.
    #[arg(long)]
    scene_id: Option<String>,
    /// Replay this demonstration's setup instead of sampling one.
    #[arg(long)]
    demo: Option<PathBuf>,
    /// Scripted human mode for sampled setups.
    #[arg(long, value_parser = parse_mode)]
    human_mode: Option<HumanMode>,
}

#[derive(Args)]
struct Evaluate {
    #[command(flatten)]
    common: Common,
    /// Policy checkpoints; each one is a configuration in the report.
    #[arg(long, required = true)]
    policy: Vec<PathBuf>,
    /// Scene file or directory [default: $PREFNAV_DATA_DIR/scenes].
    #[arg(long)]
    scene: Option<PathBuf>,
    /// Demonstration file or directory whose demos become extra scenarios.
    #[arg(long)]
    scenarios: Option<PathBuf>,
    /// Skip the scripted human-mode scenarios.
    #[arg(long)]
    demos_only: bool,
    /// Rollouts per scenario.
    #[arg(long)]
    n: Option<usize>,
    /// Worker threads for rollouts; 1 runs sequentially.
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Args)]
struct Frechet {
    /// Rollout trajectory: rows, a demonstration, or a rollout result.
    #[arg(long)]
    a: PathBuf,
    /// Reference trajectory, same formats as --a.
    #[arg(long)]
    b: PathBuf,
    #[arg(long, default_value = "auto", value_parser = parse_endpoint)]
    mode: EndpointMode,
    /// Also write the partial-distance curve as `t,f` CSV.
    #[arg(long)]
    curve_csv: Option<PathBuf>,
}

#[derive(Args)]
struct Serve {
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: String,
    /// Data root holding scenes/, demos/ and policies/ [default: $PREFNAV_DATA_DIR or ./data].
    #[arg(long)]
    data_dir: Option<PathBuf>,
}

fn parse_mode(s: &str) -> Result<HumanMode, String> {
    let tag = s.to_ascii_uppercase().replace('-', "_");
    serde_json::from_value(serde_json::Value::String(tag)).map_err(|_| format!("unknown human mode {s:?}"))
}

fn parse_endpoint(s: &str) -> Result<EndpointMode, String> {
    match s.to_ascii_lowercase().as_str() {
        "auto" => Ok(EndpointMode::Auto),
        "forward" => Ok(EndpointMode::Forward),
        "reversed" => Ok(EndpointMode::Reversed),
        _ => Err(format!("unknown endpoint mode {s:?}")),
    }
}

fn scenes_arg(p: &Option<PathBuf>) -> CliResult<Vec<Scene>> {
    let path = p.clone().unwrap_or_else(|| data_root().join("scenes"));
    let scenes = load_scenes(&path).map_err(CliError::runtime)?;
    if scenes.is_empty() {
        return Err(CliError::Runtime(format!("no scenes in {}", path.display())));
    }
    Ok(scenes)
}

fn out_dir(c: &Common) -> CliResult<&Path> {
    std::fs::create_dir_all(&c.out).map_err(|e| CliError::Runtime(format!("{}: {e}", c.out.display())))?;
    Ok(&c.out)
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> CliResult {
    let mut bytes = serde_json::to_vec_pretty(v).map_err(CliError::runtime)?;
    bytes.push(b'\n');
    prefnav_core::write_atomic(path, &bytes).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn load_run_config(c: &Common) -> CliResult<RunConfig> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p).map_err(CliError::Usage)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn gen_dataset(a: GenDataset) -> CliResult {
    let mut cfg = load_run_config(&a.common)?;
    apply(&mut cfg.dataset.frames, a.n);
    cfg.perception.fov_deg = a.variant.fov_deg();
    cfg.dataset.seed = cfg.seed;
    let scenes = scenes_arg(&a.scene)?;
    let records = generate_dataset(&scenes, &cfg.sim, &cfg.perception, &cfg.dataset, Execution::Sequential)
        .map_err(CliError::runtime)?;
    let out = out_dir(&a.common)?;
    let mut buf = Vec::new();
    write_jsonl(&mut buf, &records).map_err(CliError::runtime)?;
    prefnav_core::write_atomic(&out.join("dataset.jsonl"), &buf).map_err(CliError::runtime)?;
    let stats = dataset_stats(&records);
    write_json(&out.join("dataset_stats.json"), &stats)?;
    write_snapshot(out, &cfg)?;
    println!("{}", serde_json::to_string(&stats).map_err(CliError::runtime)?);
    Ok(())
}

fn read_dataset(p: &Path) -> CliResult<Vec<prefnav_core::perception::dataset::FrameRecord>> {
    let f = std::fs::File::open(p).map_err(|e| CliError::Runtime(format!("{}: {e}", p.display())))?;
    read_jsonl(std::io::BufReader::new(f)).map_err(|e| CliError::Runtime(format!("{}: {e}", p.display())))
}

fn train_vae_cmd(a: TrainVae) -> CliResult {
    let mut cfg = load_run_config(&a.common)?;
    apply(&mut cfg.vae_train.epochs, a.epochs);
    // scans keep the field of view they were recorded with
    if let Some(rec) = recorded_with(&a.dataset)? {
        cfg.perception.fov_deg = rec.perception.fov_deg;
        cfg.perception.rays = rec.perception.rays;
        cfg.perception.max_range = rec.perception.max_range;
    }
    let records = read_dataset(&a.dataset)?;
    if records.first().is_some_and(|r| r.scan.len() != cfg.perception.rays) {
        return Err(CliError::Usage("dataset ray count differs from the perception config".into()));
    }
    let (vae, report) = fit_vae(&records, &cfg.perception, &cfg.vae_train, cfg.seed).map_err(CliError::runtime)?;
    let out = out_dir(&a.common)?;
    let mut ck = vae.to_checkpoint(cfg.seed, (cfg.vae_train.epochs * report.train_frames) as u64);
    ck.manifest.config["perception"] = serde_json::to_value(&cfg.perception).map_err(CliError::runtime)?;
    prefnav_core::write_atomic(&out.join("vae.json"), ck.to_json().as_bytes()).map_err(CliError::runtime)?;
    write_json(&out.join("vae_report.json"), &report)?;
    write_snapshot(out, &cfg)?;
    println!(
        "test mse {:.6}, corrupted {:.6}, mean baseline {:.6} (ratio {:.3})",
        report.test_mse,
        report.test_mse_corrupted,
        report.baseline_mse,
        report.ratio()
    );
    Ok(())
}

/// The run config saved next to a dataset by gen-dataset, if any.
fn recorded_with(dataset: &Path) -> CliResult<Option<RunConfig>> {
    let snap = dataset.with_file_name(config::SNAPSHOT_FILE);
    if !snap.exists() {
        return Ok(None);
    }
    RunConfig::load(&snap).map(Some).map_err(CliError::Runtime)
}

/// The VAE and the perception config it was trained with.
fn load_vae(p: &Path) -> CliResult<(Vae, PerceptionConfig)> {
    let ck = Checkpoint::load(p).map_err(|e| CliError::Runtime(format!("{}: {e}", p.display())))?;
    let vae = Vae::from_checkpoint(&ck).map_err(CliError::runtime)?;
    let pcfg: PerceptionConfig = serde_json::from_value(ck.manifest.config["perception"].clone())
        .map_err(|e| CliError::Runtime(format!("{}: missing perception config: {e}", p.display())))?;
    Ok((vae, pcfg))
}

fn train_predictor_cmd(a: TrainPredictor) -> CliResult {
    let mut cfg = load_run_config(&a.common)?;
    apply(&mut cfg.predictor_train.epochs, a.epochs);
    let (vae, pcfg) = load_vae(&a.vae)?;
    cfg.perception = PerceptionConfig {
        predictor_hidden: cfg.perception.predictor_hidden,
        predictor_pose_hidden: cfg.perception.predictor_pose_hidden,
        ..pcfg
    };
    let records = read_dataset(&a.dataset)?;
    let (model, report) =
        fit_predictor(&records, &vae, &cfg.perception, &cfg.predictor_train, cfg.seed).map_err(CliError::runtime)?;
    let out = out_dir(&a.common)?;
    let ck = model.to_checkpoint(cfg.seed, (cfg.predictor_train.epochs * report.train_windows) as u64);
    prefnav_core::write_atomic(&out.join("predictor.json"), ck.to_json().as_bytes()).map_err(CliError::runtime)?;
    write_json(&out.join("predictor_report.json"), &report)?;
    write_snapshot(out, &cfg)?;
    println!(
        "dynamic test loss {:.6}, copy-last baseline {:.6}",
        report.test.total, report.copy_last.total
    );
    Ok(())
}

fn train_policy_cmd(a: TrainPolicy) -> CliResult {
    let v = a.variant;
    if a.no_demos && v.uses_demos() {
        return Err(CliError::Usage(format!("{v} learns from demonstrations; --no-demos only fits vae-nd")));
    }
    if v.uses_predictor() != a.predictor.is_some() {
        return Err(CliError::Usage(if v.uses_predictor() {
            format!("{v} needs --predictor")
        } else {
            format!("{v} does not use a predictor")
        }));
    }
    let mut cfg = load_run_config(&a.common)?;
    apply(&mut cfg.td3.total_steps, a.steps);
    apply(&mut cfg.td3.hidden, a.hidden);
    cfg.td3.seed = cfg.seed;
    if !v.uses_demos() {
        cfg.td3 = cfg.td3.without_demos();
    }
    cfg.td3.validate().map_err(|e| CliError::Usage(e.to_string()))?;

    let (vae, pcfg) = load_vae(&a.vae)?;
    if pcfg.fov_deg != v.fov_deg() {
        return Err(CliError::Usage(format!(
            "VAE was trained with a {}° field of view, {v} needs {}°",
            pcfg.fov_deg,
            v.fov_deg()
        )));
    }
    cfg.perception = pcfg.clone();
    let predictor = match &a.predictor {
        Some(p) => {
            let ck = Checkpoint::load(p).map_err(|e| CliError::Runtime(format!("{}: {e}", p.display())))?;
            Some(Predictor::from_checkpoint(&ck).map_err(CliError::runtime)?)
        }
        None => None,
    };
    let models = PerceptionBundle::new(v, pcfg, &vae, predictor.as_ref());
    let perception: Perception = models.perception(Phase::Train).map_err(CliError::runtime)?;
    let scenes = scenes_arg(&a.scene)?;
    let demos: Vec<Demonstration> = if v.uses_demos() {
        let path = a.demos.clone().unwrap_or_else(|| data_root().join("demos"));
        load_demos(&path).map_err(CliError::runtime)?.into_iter().map(|d| d.1).collect()
    } else {
        Vec::new()
    };
    let out = out_dir(&a.common)?;
    write_snapshot(out, &cfg)?;
    let outcome = train(&cfg.td3, &cfg.sim, &perception, &scenes, &demos, &mut |p, _| {
        if p.episode % 100 == 0 {
            log::info!("episode {} step {} return {:.2} {:?}", p.episode, p.step, p.row.return_, p.row.outcome);
        }
        Ok(())
    })
    .map_err(|e| match e {
        prefnav_core::learn::LearnError::NoDemos | prefnav_core::learn::LearnError::Config(_) => {
            CliError::Usage(e.to_string())
        }
        e => CliError::runtime(e),
    })?;
    save_policy(&out.join("policy.json"), &outcome.bundle, &models, cfg.seed, cfg.td3.total_steps as u64)
        .map_err(CliError::runtime)?;
    let mut csv = Vec::new();
    write_log_csv(&mut csv, &outcome.log).map_err(CliError::runtime)?;
    prefnav_core::write_atomic(&out.join("train_log.csv"), &csv).map_err(CliError::runtime)?;
    println!("trained {v} for {} steps over {} episodes", cfg.td3.total_steps, outcome.log.len());
    Ok(())
}

fn pick_scene(scenes: &[Scene], id: Option<&str>) -> CliResult<Scene> {
    match id {
        Some(id) => scenes
            .iter()
            .find(|s| s.id() == id)
            .cloned()
            .ok_or_else(|| CliError::Usage(format!("unknown scene {id:?}"))),
        None if scenes.len() == 1 => Ok(scenes[0].clone()),
        None => Err(CliError::Usage("several scenes loaded; pick one with --scene-id".into())),
    }
}

#[derive(Serialize)]
struct RolloutOutput<'a> {
    init: &'a prefnav_core::sim::EpisodeInit,
    #[serde(flatten)]
    result: &'a prefnav_core::sim::EpisodeResult,
}

fn rollout_cmd(a: Rollout) -> CliResult {
    let cfg = load_run_config(&a.common)?;
    let policy = load_policy(&a.policy).map_err(CliError::runtime)?;
    let scenes = scenes_arg(&a.scene)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
    let (scene, init) = match &a.demo {
        Some(p) => {
            let d = Demonstration::load(p).map_err(CliError::runtime)?;
            let scene = pick_scene(&scenes, Some(&d.scene_id))?;
            let init = d.jittered_init(&scene, &cfg.sim, &mut rng);
            (scene, init)
        }
        None => {
            let scene = pick_scene(&scenes, a.scene_id.as_deref())?;
            let w = a.human_mode.map_or_else(ModeWeights::default, ModeWeights::only);
            let mut init = sample_episode(&scene, &cfg.sim, &w, &mut rng).map_err(CliError::runtime)?;
            init.seed = cfg.seed;
            (scene, init)
        }
    };
    let act = greedy(&policy.bundle);
    let mut p = |s: &prefnav_core::perception::StateVec| act(s);
    let (result, transitions) =
        run_episode(&mut p, &scene, &cfg.sim, &init, &policy.perception).map_err(CliError::runtime)?;
    let out = out_dir(&a.common)?;
    write_json(&out.join("rollout.json"), &RolloutOutput { init: &init, result: &result })?;
    let mut log = Vec::new();
    write_log(&mut log, &init, &transitions).map_err(CliError::runtime)?;
    prefnav_core::write_atomic(&out.join("rollout_log.jsonl"), &log).map_err(CliError::runtime)?;
    write_snapshot(out, &cfg)?;
    println!("{:?} after {} steps, return {:.4}", result.outcome, result.steps, result.return_);
    Ok(())
}

fn evaluate_cmd(a: Evaluate) -> CliResult {
    let mut cfg = load_run_config(&a.common)?;
    apply(&mut cfg.eval.n, a.n);
    let scenes = scenes_arg(&a.scene)?;
    let demos = match &a.scenarios {
        Some(p) => load_demos(p).map_err(CliError::runtime)?,
        None => Vec::new(),
    };
    let mut scenarios: Vec<Scenario> = default_scenarios(&scenes, &demos);
    if a.demos_only {
        scenarios.retain(|s| s.human_mode() == HumanMode::DemoReplay);
    }
    if scenarios.is_empty() {
        return Err(CliError::Usage("no scenarios to evaluate".into()));
    }
    let exec = if a.workers > 1 { Execution::Parallel } else { Execution::Sequential };
    let mut reports = Vec::new();
    for path in &a.policy {
        let policy = load_policy(path).map_err(CliError::runtime)?;
        let label = path
            .file_stem()
            .map_or_else(|| policy.models.variant.to_string(), |s| s.to_string_lossy().into_owned());
        let label = if label == "policy" {
            path.parent()
                .and_then(|p| p.file_name())
                .map_or(label.clone(), |s| s.to_string_lossy().into_owned())
        } else {
            label
        };
        let ecfg = EvalConfig {
            configuration: label,
            episodes: cfg.eval.n,
            seed: cfg.seed,
            execution: exec,
        };
        let act = greedy(&policy.bundle);
        let report = with_workers(a.workers, || {
            evaluate_controller(&act, &policy.perception, &scenes, &scenarios, &cfg.sim, &ecfg)
        })
        .map_err(CliError::runtime)?;
        println!(
            "{}: success {:.3}, collision {:.3}, timeout {:.3}",
            report.configuration, report.success_rate, report.collision_rate, report.timeout_rate
        );
        reports.push(report);
    }
    let out = out_dir(&a.common)?;
    write_reports(out, &reports).map_err(CliError::runtime)?;
    write_snapshot(out, &cfg)?;
    Ok(())
}

/// Reads trajectory rows, a demonstration (robot track) or a rollout
/// result (robot trajectory).
fn read_trajectory(p: &Path) -> CliResult<Trajectory> {
    let text = std::fs::read_to_string(p).map_err(|e| CliError::Runtime(format!("{}: {e}", p.display())))?;
    let v: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Runtime(format!("{}: {e}", p.display())))?;
    let rows = if v.is_array() {
        v
    } else if let Some(r) = v.get("robot_traj") {
        r.clone()
    } else if let Some(r) = v.get("robot") {
        r.clone()
    } else {
        return Err(CliError::Runtime(format!("{}: no trajectory found", p.display())));
    };
    serde_json::from_value(rows).map_err(|e| CliError::Runtime(format!("{}: {e}", p.display())))
}

fn frechet_cmd(a: Frechet) -> CliResult {
    let (ta, tb) = (read_trajectory(&a.a)?, read_trajectory(&a.b)?);
    let r = trajectory_frechet(&ta, &tb, a.mode).map_err(CliError::runtime)?;
    println!("F_full {:.6}", r.f_full);
    println!("t_star {:.6}", r.t_star);
    println!("f_at_t_star {:.6}", r.f_at_t_star);
    println!("reversed {}", r.reversed);
    if let Some(p) = &a.curve_csv {
        let mut s = String::from("t,f\n");
        for (t, f) in &r.curve {
            s.push_str(&format!("{t},{f}\n"));
        }
        prefnav_core::write_atomic(p, s.as_bytes()).map_err(CliError::runtime)?;
    }
    Ok(())
}

fn serve_cmd(a: Serve) -> CliResult {
    let root = a.data_dir.unwrap_or_else(data_root);
    let rt = tokio::runtime::Runtime::new().map_err(CliError::runtime)?;
    rt.block_on(async {
        let state = prefnav_service::AppState::load(&prefnav_service::ServiceConfig::under(&root))
            .map_err(CliError::runtime)?;
        prefnav_service::serve(&a.addr, state).await.map_err(CliError::runtime)
    })
}

fn dispatch(cli: Cli) -> CliResult {
    match cli.command {
        Command::GenDataset(a) => gen_dataset(a),
        Command::TrainVae(a) => train_vae_cmd(a),
        Command::TrainPredictor(a) => train_predictor_cmd(a),
        Command::TrainPolicy(a) => train_policy_cmd(a),
        Command::Rollout(a) => rollout_cmd(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Frechet(a) => frechet_cmd(a),
        Command::Serve(a) => serve_cmd(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(CliError::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
