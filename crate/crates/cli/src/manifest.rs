use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use serde::{Deserialize, Serialize};

use crate::config::RunFile;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Everything needed to rerun a run directory: the effective configuration
/// (seed and backend overrides applied) plus bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub command: String,
    pub config: RunFile,
    pub grid: GridMeta,
    pub seed: u64,
    /// unix seconds
    pub started: f64,
    pub finished: f64,
    pub timings: Vec<Timing>,
    /// checkpoints in write order, relative to the run directory
    pub checkpoints: Vec<String>,
    /// files written besides the manifest and checkpoints
    pub outputs: Vec<String>,
    /// error that stopped the run, if any
    pub abort: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub dim: usize,
    pub points_per_axis: usize,
    pub period: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub phase: String,
    pub seconds: f64,
}

pub fn now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

impl RunManifest {
    pub fn new(command: &str, config: &RunFile) -> Self {
        let g = &config.solver.grid;
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config: config.clone(),
            grid: GridMeta { dim: g.dim, points_per_axis: g.points_per_axis, period: g.period },
            seed: config.solver.seed,
            started: now(),
            finished: 0.0,
            timings: Vec::new(),
            checkpoints: Vec::new(),
            outputs: Vec::new(),
            abort: None,
        }
    }

    pub fn write(&self, dir: &Path) -> anyhow::Result<()> {
        let path = dir.join(MANIFEST_FILE);
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, serde_json::to_string_pretty(self)?).with_context(|| format!("writing {}", tmp.display()))?;
        std::fs::rename(&tmp, &path).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }

    pub fn read(dir: &Path) -> anyhow::Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}
