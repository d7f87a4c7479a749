//! Run artifacts: snapshot and diagnostics CSV files and a JSON manifest.
//!
//! Numbers are written as `{:.16e}` (17 significant digits), rows in grid or time order,
//! so identical runs produce byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;
use sha2::{Digest, Sha256};

use super::config::{Format, SimulationConfig};
use super::CliError;
use crate::evolution::{SimulationState, StopReason, Trajectory};

pub const SNAPSHOT_HEADER: &str = "x [L],f [L]";
pub const DIAGNOSTICS_HEADER: &str =
    "t [T],mass [L^2],energy [L],max_slope [1],linf [L],spectral_tail [1]";

pub fn snapshot_name(step: usize) -> String {
    format!("snapshot_{step:07}.csv")
}

pub fn snapshot_csv(state: &SimulationState) -> String {
    let grid = state.f.grid();
    let mut out = String::with_capacity(48 * (grid.len() + 1));
    out.push_str(SNAPSHOT_HEADER);
    out.push('\n');
    for (j, v) in state.f.values().iter().enumerate() {
        out.push_str(&format!("{:.16e},{:.16e}\n", grid.node(j), v));
    }
    out
}

pub fn diagnostics_csv(traj: &Trajectory) -> String {
    let mut out = String::from(DIAGNOSTICS_HEADER);
    out.push('\n');
    for (t, d) in &traj.diagnostics {
        out.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            t, d.mass, d.energy, d.max_slope, d.linf, d.spectral_tail
        ));
    }
    out
}

/// Hex SHA-256 of the canonical TOML form of `cfg`.
pub fn config_hash(cfg: &SimulationConfig) -> String {
    Sha256::digest(cfg.to_toml().as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn stop_record(stop: &StopReason) -> serde_json::Value {
    let detail = match stop {
        StopReason::Completed => serde_json::Value::Null,
        StopReason::BlowUpSuspected { max_slope } => json!({ "max_slope": max_slope }),
        StopReason::ResolutionLost { spectral_tail } => json!({ "spectral_tail": spectral_tail }),
        StopReason::Failed(e) => json!({ "error": e.to_string() }),
    };
    json!({ "reason": stop.label(), "detail": detail })
}

pub fn manifest(cfg: &SimulationConfig, traj: &Trajectory) -> serde_json::Value {
    let csv = cfg.wants(Format::Csv);
    let snapshots: Vec<_> = traj
        .snapshots
        .iter()
        .map(|s| {
            json!({
                "step": s.step_index,
                "t": s.t,
                "file": if csv { json!(snapshot_name(s.step_index)) } else { serde_json::Value::Null },
            })
        })
        .collect();
    let last = traj.last();
    json!({
        "program": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "config_sha256": config_hash(cfg),
        "config": cfg,
        "stop": stop_record(&traj.stop),
        "steps": last.step_index,
        "t_final": last.t,
        "snapshots": snapshots,
        "diagnostics_file": if csv { json!("diagnostics.csv") } else { serde_json::Value::Null },
    })
}

fn write(path: PathBuf, contents: &str) -> Result<PathBuf, CliError> {
    fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

/// Writes the artifacts selected by `cfg.output.formats`; returns the written paths.
pub fn write_run(cfg: &SimulationConfig, traj: &Trajectory) -> Result<Vec<PathBuf>, CliError> {
    let dir: &Path = &cfg.output.directory;
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut written = vec![];
    if cfg.wants(Format::Csv) {
        for s in &traj.snapshots {
            written.push(write(dir.join(snapshot_name(s.step_index)), &snapshot_csv(s))?);
        }
        written.push(write(dir.join("diagnostics.csv"), &diagnostics_csv(traj))?);
    }
    if cfg.wants(Format::Json) {
        let text = serde_json::to_string_pretty(&manifest(cfg, traj)).expect("serializable manifest");
        written.push(write(dir.join("manifest.json"), &(text + "\n"))?);
    }
    Ok(written)
}
