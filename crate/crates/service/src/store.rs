use prefnav_core::sim::Demonstration;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};
use tokio::sync::{mpsc, oneshot};

pub const INDEX_FILE: &str = "demo_index.json";
/// Rejected demos live below the demo directory so training, which reads
/// only the top level, never sees them.
pub const REJECTED_DIR: &str = "rejected";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub id: String,
    pub scene_id: String,
    /// Seconds since the Unix epoch.
    pub created_at: u64,
    pub valid: bool,
}

struct SaveRequest {
    demo: Demonstration,
    valid: bool,
    reply: oneshot::Sender<std::io::Result<IndexEntry>>,
}

/// Directory-backed demonstration store. Reads come from an in-memory copy
/// of the index; every write goes through one writer task, which persists
/// the demo file and then the index, each atomically.
#[derive(Clone)]
pub struct DemoStore {
    index: Arc<RwLock<Vec<IndexEntry>>>,
    tx: mpsc::Sender<SaveRequest>,
    dir: PathBuf,
}

fn load_index(path: &Path) -> std::io::Result<Vec<IndexEntry>> {
    match std::fs::read(path) {
        Ok(bytes) => serde_json::from_slice(&bytes).map_err(std::io::Error::other),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Vec::new()),
        Err(e) => Err(e),
    }
}

impl DemoStore {
    /// Opens `demo_dir` and spawns the writer on the current runtime. The
    /// index sits next to the demo directory.
    pub fn open(demo_dir: &Path, index_path: &Path) -> std::io::Result<Self> {
        std::fs::create_dir_all(demo_dir.join(REJECTED_DIR))?;
        let index = Arc::new(RwLock::new(load_index(index_path)?));
        let (tx, mut rx) = mpsc::channel::<SaveRequest>(32);
        let (dir, idx_path, shared) = (demo_dir.to_path_buf(), index_path.to_path_buf(), index.clone());
        tokio::spawn(async move {
            while let Some(req) = rx.recv().await {
                let res = write_one(&dir, &idx_path, &shared, req.demo, req.valid);
                let _ = req.reply.send(res);
            }
        });
        Ok(Self {
            index,
            tx,
            dir: demo_dir.to_path_buf(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn list(&self, scene: Option<&str>) -> Vec<IndexEntry> {
        let idx = self.index.read().expect("index lock");
        idx.iter().filter(|e| scene.is_none_or(|s| e.scene_id == s)).cloned().collect()
    }

    pub async fn save(&self, demo: Demonstration, valid: bool) -> std::io::Result<IndexEntry> {
        let (reply, rx) = oneshot::channel();
        self.tx
            .send(SaveRequest { demo, valid, reply })
            .await
            .map_err(|_| std::io::Error::other("demo writer stopped"))?;
        rx.await.map_err(|_| std::io::Error::other("demo writer dropped the request"))?
    }
}

fn sanitize(id: &str) -> String {
    id.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '-' { c } else { '_' }).collect()
}

fn write_one(
    dir: &Path,
    index_path: &Path,
    shared: &RwLock<Vec<IndexEntry>>,
    demo: Demonstration,
    valid: bool,
) -> std::io::Result<IndexEntry> {
    let mut entries = shared.read().expect("index lock").clone();
    let n = entries.iter().filter(|e| e.scene_id == demo.scene_id).count();
    let entry = IndexEntry {
        id: format!("{}-{:04}", sanitize(&demo.scene_id), n + 1),
        scene_id: demo.scene_id.clone(),
        created_at: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        valid,
    };
    let target = if valid { dir.to_path_buf() } else { dir.join(REJECTED_DIR) };
    let body = serde_json::to_vec_pretty(&demo).map_err(std::io::Error::other)?;
    prefnav_core::write_atomic(&target.join(format!("{}.json", entry.id)), &body)?;
    entries.push(entry.clone());
    let idx = serde_json::to_vec_pretty(&entries).map_err(std::io::Error::other)?;
    prefnav_core::write_atomic(index_path, &idx)?;
    *shared.write().expect("index lock") = entries;
    Ok(entry)
}
