//! Local JSON-over-HTTP facade for the demonstration-authoring tool.
//!
//! | route | purpose |
//! |---|---|
//! | `GET /scenes` | scene ids and bounds |
//! | `GET /scenes/{id}` | scene file plus occupancy preview |
//! | `POST /demos` | validate, store and replay a drawn demonstration |
//! | `GET /demos?scene=` | demo index, optionally filtered by scene |
//! | `POST /rollouts` | one seeded rollout of a stored policy |
//! | `GET /policies` | stored policies |

mod store;

pub use store::{DemoStore, IndexEntry, INDEX_FILE, REJECTED_DIR};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use prefnav_core::artifacts::{load_policy, LoadedPolicy};
use prefnav_core::eval::greedy;
use prefnav_core::geom::{Point2, Scene, Trajectory};
use prefnav_core::sim::{
    run_episode, sample_episode, track_demo, Demonstration, EpisodeInit, EpisodeResult, HumanMode, ModeWeights,
    SimConfig, SimError,
};
use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::SystemTime;

/// Cell size of the occupancy preview, meters.
pub const PREVIEW_CELL: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub scenes_dir: PathBuf,
    pub demos_dir: PathBuf,
    pub index_path: PathBuf,
    pub policies_dir: PathBuf,
    pub sim: SimConfig,
}

impl ServiceConfig {
    /// Standard layout below a data root: `scenes/`, `demos/`,
    /// `demo_index.json` and `policies/`.
    pub fn under(root: &Path) -> Self {
        Self {
            scenes_dir: root.join("scenes"),
            demos_dir: root.join("demos"),
            index_path: root.join(INDEX_FILE),
            policies_dir: root.join("policies"),
            sim: SimConfig::default(),
        }
    }
}

struct SceneEntry {
    scene: Scene,
    /// The file as it was read, returned verbatim.
    raw: serde_json::Value,
}

type PolicyCache = Mutex<HashMap<String, (SystemTime, Arc<LoadedPolicy>)>>;

#[derive(Clone)]
pub struct AppState {
    scenes: Arc<BTreeMap<String, SceneEntry>>,
    store: DemoStore,
    policies_dir: PathBuf,
    policies: Arc<PolicyCache>,
    sim: Arc<SimConfig>,
}

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("{0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error("{0}: {1}")]
    Scene(PathBuf, String),
}

impl AppState {
    /// Loads every scene once and opens the demo store. Must run inside a
    /// tokio runtime.
    pub fn load(cfg: &ServiceConfig) -> Result<Self, ServiceError> {
        let mut scenes = BTreeMap::new();
        let dir = std::fs::read_dir(&cfg.scenes_dir).map_err(|e| ServiceError::Io(cfg.scenes_dir.clone(), e))?;
        for entry in dir.flatten() {
            let path = entry.path();
            if path.extension().is_none_or(|x| x != "json") {
                continue;
            }
            let text = std::fs::read_to_string(&path).map_err(|e| ServiceError::Io(path.clone(), e))?;
            let scene = Scene::from_json(&text).map_err(|e| ServiceError::Scene(path.clone(), e.to_string()))?;
            let raw = serde_json::from_str(&text).map_err(|e| ServiceError::Scene(path.clone(), e.to_string()))?;
            scenes.insert(scene.id().to_string(), SceneEntry { scene, raw });
        }
        let store =
            DemoStore::open(&cfg.demos_dir, &cfg.index_path).map_err(|e| ServiceError::Io(cfg.demos_dir.clone(), e))?;
        Ok(Self {
            scenes: Arc::new(scenes),
            store,
            policies_dir: cfg.policies_dir.clone(),
            policies: Arc::new(Mutex::new(HashMap::new())),
            sim: Arc::new(cfg.sim.clone()),
        })
    }

    pub fn store(&self) -> &DemoStore {
        &self.store
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/scenes", get(list_scenes))
        .route("/scenes/{id}", get(get_scene))
        .route("/demos", get(list_demos).post(post_demo))
        .route("/rollouts", axum::routing::post(post_rollout))
        .route("/policies", get(list_policies))
        .with_state(state)
}

pub async fn serve(addr: &str, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}

struct ApiError(StatusCode, serde_json::Value);

impl ApiError {
    fn new(status: StatusCode, msg: impl Into<String>) -> Self {
        ApiError(status, json!({ "error": msg.into() }))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(self.1)).into_response()
    }
}

fn internal(e: impl std::fmt::Display) -> ApiError {
    ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
}

#[derive(Serialize)]
struct SceneSummary<'a> {
    id: &'a str,
    bounds: [f64; 4],
}

async fn list_scenes(State(st): State<AppState>) -> Json<Vec<serde_json::Value>> {
    Json(
        st.scenes
            .values()
            .map(|e| json!(SceneSummary { id: e.scene.id(), bounds: e.scene.bounds() }))
            .collect(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyPreview {
    pub cell: f64,
    pub rows: usize,
    pub cols: usize,
    /// Row-major from the minimum corner; `true` means occupied.
    pub cells: Vec<bool>,
}

async fn get_scene(State(st): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<Json<serde_json::Value>, ApiError> {
    let e = st
        .scenes
        .get(&id)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("unknown scene {id:?}")))?;
    let (rows, cols, cells) = e.scene.occupancy_preview(PREVIEW_CELL);
    let preview = OccupancyPreview {
        cell: PREVIEW_CELL,
        rows,
        cols,
        cells,
    };
    Ok(Json(json!({ "scene": e.raw, "occupancy": preview })))
}

#[derive(Deserialize)]
struct DemoQuery {
    scene: Option<String>,
}

async fn list_demos(State(st): State<AppState>, Query(q): Query<DemoQuery>) -> Json<Vec<IndexEntry>> {
    Json(st.store.list(q.scene.as_deref()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: String,
    pub message: String,
    pub location: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoResponse {
    pub id: String,
    pub valid: bool,
    /// Tracking-controller replay, present when the demo is valid.
    pub replay: Option<Trajectory>,
    pub max_deviation: Option<f64>,
    pub violations: Vec<Violation>,
}

fn out_of_bounds(scene: &Scene, t: &Trajectory, who: &str) -> Option<Violation> {
    t.points().into_iter().find(|p: &Point2| !scene.in_bounds(*p)).map(|p| Violation {
        kind: "out_of_bounds".into(),
        message: format!("{who} path leaves the scene bounds"),
        location: Some([p.x, p.y]),
    })
}

fn violation(e: &SimError) -> Violation {
    let (kind, location) = match e {
        SimError::InvalidDemonstration { at } => ("collision", Some(*at)),
        SimError::Untrackable { at, .. } => ("untrackable", Some(*at)),
        _ => ("invalid", None),
    };
    Violation {
        kind: kind.into(),
        message: e.to_string(),
        location,
    }
}

async fn post_demo(State(st): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let demo: Demonstration = serde_json::from_slice(&body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, format!("malformed demonstration: {e}")))?;
    let Some(entry) = st.scenes.get(&demo.scene_id) else {
        return Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            format!("unknown scene {:?}", demo.scene_id),
        ));
    };
    let mut violations: Vec<Violation> = [Some(("robot", &demo.robot)), demo.human.as_ref().map(|h| ("human", h))]
        .into_iter()
        .flatten()
        .filter_map(|(who, t)| out_of_bounds(&entry.scene, t, who))
        .collect();
    let mut replay = None;
    let mut max_deviation = None;
    if violations.is_empty() {
        let (scenes, sim, d) = (st.scenes.clone(), st.sim.clone(), demo.clone());
        let tracked = tokio::task::spawn_blocking(move || track_demo(&d, &scenes[&d.scene_id].scene, &sim))
            .await
            .map_err(internal)?;
        match tracked {
            Ok(t) => {
                max_deviation = Some(t.max_deviation);
                replay = Some(t.replay);
            }
            Err(e) => violations.push(violation(&e)),
        }
    }
    let valid = violations.is_empty();
    let stored = st.store.save(demo, valid).await.map_err(internal)?;
    let status = if valid { StatusCode::CREATED } else { StatusCode::UNPROCESSABLE_ENTITY };
    let body = DemoResponse {
        id: stored.id,
        valid,
        replay,
        max_deviation,
        violations,
    };
    Ok((status, Json(body)).into_response())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutRequest {
    pub policy_id: String,
    pub scene_id: String,
    #[serde(default)]
    pub seed: u64,
    /// Scripted human mode; sampled uniformly when absent.
    #[serde(default)]
    pub human_mode: Option<HumanMode>,
    /// Explicit episode setup; overrides sampling.
    #[serde(default)]
    pub init: Option<EpisodeInit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutResponse {
    pub policy_id: String,
    pub init: EpisodeInit,
    #[serde(flatten)]
    pub result: EpisodeResult,
}

fn policy_path(dir: &Path, id: &str) -> Option<PathBuf> {
    let ok = !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.');
    let p = dir.join(format!("{id}.json"));
    (ok && p.is_file()).then_some(p)
}

/// Loads a policy, reusing the cached snapshot while the file is unchanged.
fn snapshot(st: &AppState, id: &str) -> Result<Arc<LoadedPolicy>, ApiError> {
    let path =
        policy_path(&st.policies_dir, id).ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("unknown policy {id:?}")))?;
    let mtime = std::fs::metadata(&path).and_then(|m| m.modified()).map_err(internal)?;
    if let Some((t, p)) = st.policies.lock().expect("policy cache").get(id) {
        if *t == mtime {
            return Ok(p.clone());
        }
    }
    let loaded = Arc::new(load_policy(&path).map_err(internal)?);
    st.policies
        .lock()
        .expect("policy cache")
        .insert(id.to_string(), (mtime, loaded.clone()));
    Ok(loaded)
}

fn rollout(st: &AppState, req: RolloutRequest) -> Result<RolloutResponse, ApiError> {
    let entry = st
        .scenes
        .get(&req.scene_id)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("unknown scene {:?}", req.scene_id)))?;
    let policy = snapshot(st, &req.policy_id)?;
    let init = match req.init {
        Some(init) => init,
        None => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(req.seed);
            let weights = req.human_mode.map_or_else(ModeWeights::default, ModeWeights::only);
            let mut init = sample_episode(&entry.scene, &st.sim, &weights, &mut rng)
                .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()))?;
            init.seed = req.seed;
            init
        }
    };
    let act = greedy(&policy.bundle);
    let mut p = |s: &prefnav_core::perception::StateVec| act(s);
    let (result, _) = run_episode(&mut p, &entry.scene, &st.sim, &init, &policy.perception)
        .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()))?;
    Ok(RolloutResponse {
        policy_id: req.policy_id,
        init,
        result,
    })
}

async fn post_rollout(State(st): State<AppState>, body: Bytes) -> Result<Json<RolloutResponse>, ApiError> {
    let req: RolloutRequest = serde_json::from_slice(&body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, format!("malformed rollout request: {e}")))?;
    let res = tokio::task::spawn_blocking(move || rollout(&st, req)).await.map_err(internal)??;
    Ok(Json(res))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySummary {
    pub id: String,
    pub variant: String,
    pub seed: u64,
    pub train_steps: u64,
}

fn policy_summaries(st: &AppState) -> Result<Vec<PolicySummary>, ApiError> {
    let Ok(dir) = std::fs::read_dir(&st.policies_dir) else {
        return Ok(Vec::new());
    };
    let mut ids: Vec<String> = dir
        .flatten()
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .filter_map(|p| p.file_stem().map(|s| s.to_string_lossy().into_owned()))
        .filter(|id| !id.starts_with('.'))
        .collect();
    ids.sort();
    let mut out = Vec::new();
    for id in ids {
        match snapshot(st, &id) {
            Ok(p) => out.push(PolicySummary {
                id,
                variant: p.models.variant.to_string(),
                seed: p.bundle.config().seed,
                train_steps: p.bundle.config().total_steps as u64,
            }),
            Err(e) => log::warn!("skipping policy {id}: {}", e.1),
        }
    }
    Ok(out)
}

async fn list_policies(State(st): State<AppState>) -> Result<Json<Vec<PolicySummary>>, ApiError> {
    let out = tokio::task::spawn_blocking(move || policy_summaries(&st)).await.map_err(internal)??;
    Ok(Json(out))
}
