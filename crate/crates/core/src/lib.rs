//! Learning personalized navigation from drawn demonstrations.
//!
//! The crate is organized bottom-up:
//!
//! - [`geom`]: poses, polar references, trajectories, scenes, raycasting, A*.
//! - [`sim`]: differential-drive episodes, sparse rewards, demonstration replay.
//! - [`nn`]: dense networks, a gated recurrent cell, Adam, gradient checking.
//! - [`perception`]: depth scans, the β-VAE, human detection, the predictor,
//!   and policy state assembly.
//! - [`learn`]: TD3 with a behavioral-cloning term on demonstration data.
//! - [`eval`]: robustness rates and the deviation-aware Fréchet metric.
//! - [`artifacts`]: on-disk scenes, demos, model fitting and policy files.
//!
//! Batch workloads (evaluation rollouts, dataset generation, metric sweeps)
//! run on rayon when the `parallel` feature is enabled; see [`exec`].

pub mod artifacts;
pub mod eval;
pub mod exec;
pub mod geom;
pub mod learn;
pub mod nn;
pub mod perception;
pub mod sim;

use std::io::Write;
use std::path::Path;

/// Writes `bytes` to a temporary sibling of `path`, then renames it into
/// place so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| std::io::Error::new(std::io::ErrorKind::InvalidInput, "path has no file name"))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".{}.tmp", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)
}
