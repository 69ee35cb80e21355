//! On-disk trajectory artifacts: `manifest.json`, `series.csv` and one field file per
//! snapshot under `snapshots/`. 1D snapshots are CSV, 2D snapshots flat binary.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::experiments::ExperimentReport;
use crate::io;
use crate::stepper::{Mode, Trajectory};

pub const MANIFEST: &str = "manifest.json";
pub const SERIES: &str = "series.csv";
pub const SNAPSHOT_DIR: &str = "snapshots";

pub const SERIES_COLUMNS: [&str; 8] = ["t", "tau", "l1", "linf", "lipschitz", "supportRadius", "dt", "clampCount"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SnapshotEntry {
    pub index: usize,
    pub t: f64,
    pub tau: f64,
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Manifest {
    pub config_hash: String,
    pub config: RunConfig,
    pub mode: Mode,
    pub aborted: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abort_reason: Option<String>,
    pub steps: usize,
    pub eps_pos: f64,
    pub initial_linf: f64,
    /// Tangent of the theoretical decay rate `-1/(q-1)`.
    pub decay_exponent: f64,
    pub series: String,
    pub snapshots: Vec<SnapshotEntry>,
    #[serde(default)]
    pub comparisons: Vec<serde_json::Value>,
    #[serde(default)]
    pub experiments: Vec<ExperimentReport>,
}

fn snapshot_name(k: usize, dim: usize) -> String {
    let ext = if dim == 1 { "csv" } else { "bin" };
    format!("{SNAPSHOT_DIR}/snapshot_{k:04}.{ext}")
}

pub fn write_series<W: std::io::Write>(traj: &Trajectory<f64>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let fmt = |e: csv::Error| Error::Format(e.to_string());
    w.write_record(SERIES_COLUMNS).map_err(fmt)?;
    for k in 0..traj.len() {
        let n = &traj.norms[k];
        w.write_record([
            traj.times[k].to_string(),
            traj.taus[k].to_string(),
            n.l1.to_string(),
            n.linf.to_string(),
            n.lipschitz.to_string(),
            traj.support_radius[k].to_string(),
            traj.dts[k].to_string(),
            traj.clamp_counts[k].to_string(),
        ])
        .map_err(fmt)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes every artifact of a (possibly aborted) run and returns the manifest. Comparison
/// entries are serialized [`crate::barriers::ComparisonReport`]s or error records.
pub fn write_run(
    dir: &Path,
    config: &RunConfig,
    traj: &Trajectory<f64>,
    abort: Option<&Error>,
    comparisons: &[serde_json::Value],
    experiments: &[ExperimentReport],
) -> Result<Manifest> {
    fs::create_dir_all(dir.join(SNAPSHOT_DIR))?;
    write_series(traj, fs::File::create(dir.join(SERIES))?)?;
    let mut snapshots = Vec::with_capacity(traj.len());
    for k in 0..traj.len() {
        let file = snapshot_name(k, config.grid.dim());
        io::save(&traj.snapshots[k], &dir.join(&file))?;
        snapshots.push(SnapshotEntry { index: k, t: traj.times[k], tau: traj.taus[k], file });
    }
    let manifest = Manifest {
        config_hash: config.hash(),
        config: config.clone(),
        mode: traj.mode,
        aborted: abort.is_some(),
        abort_reason: abort.map(|e| e.to_string()),
        steps: traj.steps,
        eps_pos: traj.eps_pos,
        initial_linf: traj.initial_linf,
        decay_exponent: -1.0 / (config.params.q() - 1.0),
        series: SERIES.to_string(),
        snapshots,
        comparisons: comparisons.to_vec(),
        experiments: experiments.to_vec(),
    };
    write_manifest(dir, &manifest)?;
    Ok(manifest)
}

pub fn write_manifest(dir: &Path, manifest: &Manifest) -> Result<()> {
    let f = fs::File::create(dir.join(MANIFEST))?;
    serde_json::to_writer_pretty(f, manifest)?;
    Ok(())
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(dir.join(MANIFEST))?;
    Ok(serde_json::from_str(&text)?)
}

/// Reloads a trajectory from its artifacts. Checks evaluated on the result agree with
/// those evaluated on the in-memory trajectory, since snapshot values round-trip exactly.
pub fn load_run(dir: &Path) -> Result<(Manifest, Trajectory<f64>)> {
    let manifest = read_manifest(dir)?;
    let mut times = Vec::with_capacity(manifest.snapshots.len());
    let mut fields = Vec::with_capacity(manifest.snapshots.len());
    for s in &manifest.snapshots {
        times.push(s.t);
        fields.push(io::load(&dir.join(&s.file))?);
    }
    let mut traj = Trajectory::from_snapshots(
        manifest.config.params,
        manifest.mode,
        times,
        fields,
        manifest.config.eps_rel,
        manifest.initial_linf,
    )?;
    traj.eps_pos = manifest.eps_pos;
    traj.support_radius = (0..traj.len()).map(|k| traj.positivity_set(k).support_radius()).collect();
    traj.taus = manifest.snapshots.iter().map(|s| s.tau).collect();
    traj.steps = manifest.steps;
    Ok((manifest, traj))
}

pub fn snapshot_path(dir: &Path, manifest: &Manifest, k: usize) -> Option<PathBuf> {
    manifest.snapshots.get(k).map(|s| dir.join(&s.file))
}
