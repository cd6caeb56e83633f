//! Run manifests: enough to re-run a command and get the same bytes.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use rangelp_core::{ExperimentConfig, GateSpec, Model, StrategyKind};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub argv: Vec<String>,
    pub base_seed: Option<u64>,
    pub config: serde_json::Value,
    pub artifacts: Vec<PathBuf>,
    pub started_unix: f64,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn new(command: &str, started: SystemTime, elapsed: Duration) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_owned(),
            argv: std::env::args().collect(),
            base_seed: None,
            config: serde_json::Value::Null,
            artifacts: Vec::new(),
            started_unix: started.duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64()),
            wall_clock_seconds: elapsed.as_secs_f64(),
        }
    }

    /// Write to `path` through a temporary sibling and a rename.
    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        write_atomic(path, &serde_json::to_vec_pretty(self).map_err(std::io::Error::other)?)
    }
}

/// `out.csv` → `out.csv.manifest.json`.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.write_all(b"\n")?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)
}

/// Serializable echo of an [`ExperimentConfig`], rates per year.
#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub model: &'static str,
    pub strategy: &'static str,
    pub mu: f64,
    pub sigma: f64,
    pub theta: f64,
    pub gamma: f64,
    pub dt_years: f64,
    pub steps: usize,
    pub rounds: usize,
    pub z0: f64,
    pub p0: f64,
    pub l0: f64,
    pub alpha: f64,
    pub base_seed: u64,
    pub gate: serde_json::Value,
    pub noise_substeps: u32,
}

impl From<&ExperimentConfig> for ConfigEcho {
    fn from(c: &ExperimentConfig) -> Self {
        ConfigEcho {
            model: match c.model {
                Model::Exogenous => "exogenous",
                Model::MeanReverting => "mean-reverting",
            },
            strategy: match c.strategy {
                StrategyKind::Chasing => "chasing",
                StrategyKind::Gated => "gated",
                StrategyKind::Theorem2Sde => "theorem2-sde",
                StrategyKind::ClosedForm => "closed-form",
            },
            mu: c.gbm.mu,
            sigma: c.gbm.sigma,
            theta: c.mr.theta,
            gamma: c.mr.gamma,
            dt_years: c.grid.dt,
            steps: c.grid.n_steps,
            rounds: c.rounds,
            z0: c.z0.get(),
            p0: c.p0.get(),
            l0: c.l0,
            alpha: c.alpha,
            base_seed: c.base_seed,
            gate: match c.gate {
                GateSpec::Exact => "exact".into(),
                GateSpec::Approx => "approx".into(),
                GateSpec::Explicit { delta_l, delta_r } => serde_json::json!({ "delta_l": delta_l, "delta_r": delta_r }),
            },
            noise_substeps: c.noise_substeps,
        }
    }
}

pub fn echo(cfg: &ExperimentConfig) -> serde_json::Value {
    serde_json::to_value(ConfigEcho::from(cfg)).unwrap_or(serde_json::Value::Null)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sidecar_name() {
        assert_eq!(manifest_path(Path::new("a/out.csv")), PathBuf::from("a/out.csv.manifest.json"));
    }

    #[test]
    fn atomic_write_leaves_no_temporary() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        let mut m = RunManifest::new("simulate", SystemTime::now(), Duration::from_millis(1500));
        m.config = echo(&ExperimentConfig::desk_default());
        m.base_seed = Some(0);
        m.write(&path).unwrap();
        let names: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(names, vec![std::ffi::OsString::from("m.json")]);
        let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
        assert_eq!(v["config"]["steps"], 35280);
        assert_eq!(v["config"]["model"], "mean-reverting");
        assert_eq!(v["wall_clock_seconds"], 1.5);
    }
}
