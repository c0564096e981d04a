use std::path::Path;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use elastowave::nullforms::{check_bilinear_hypotheses, Ensemble, ProductEstimate};
use elastowave::solver::RunConfig;

/// Contents of a run configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunFile {
    pub solver: RunConfig,
    pub output: OutputConfig,
    #[serde(default)]
    pub probes: ProbeSuite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// stepper steps between checkpoints; a multiple of `record_every`
    pub checkpoint_every: usize,
}

/// Probe suites run after the solver (or alone with `probe`).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSuite {
    pub bilinear: Option<BilinearSuite>,
    pub product: Option<ProductSuite>,
    pub ld4: Option<Ld4Suite>,
}

/// Bilinear estimate sweep at the solver's `(n, s, theta, epsilon)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BilinearSuite {
    pub scales: Vec<usize>,
    pub samples: usize,
    pub ensemble: Ensemble,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProductSuite {
    pub estimates: Vec<ProductEstimate>,
    pub points_per_axis: usize,
    pub time_samples: usize,
    pub samples: usize,
}

/// Frame equivalence of `H^s` on the run's data map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ld4Suite {
    pub s: f64,
    pub fields: usize,
}

impl RunFile {
    /// Reads a TOML run file, or the configuration snapshot of a
    /// `manifest.json` from an earlier run.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        if path.extension().is_some_and(|e| e == "json") {
            let m: crate::manifest::RunManifest =
                serde_json::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))?;
            return Ok(m.config);
        }
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.solver.validate().context("invalid solver configuration")?;
        let every = self.output.checkpoint_every;
        let rec = self.solver.stepper.record_every;
        if every == 0 || every % rec != 0 {
            bail!("output.checkpoint_every = {every} must be a positive multiple of stepper.record_every = {rec}");
        }
        let n = self.solver.grid.dim;
        if let Some(b) = &self.probes.bilinear {
            check_bilinear_hypotheses(n, self.solver.s, self.solver.theta, self.solver.epsilon)
                .context("bilinear probe")?;
            if b.scales.is_empty() || b.scales.contains(&0) || b.samples == 0 {
                bail!("bilinear probe needs nonzero scales and samples");
            }
        }
        if let Some(p) = &self.probes.product {
            for e in &p.estimates {
                e.check(n).with_context(|| format!("product probe {e:?}"))?;
            }
            if p.samples == 0 {
                bail!("product probe needs samples >= 1");
            }
        }
        if let Some(l) = &self.probes.ld4 {
            if !(l.s > 0.0 && l.s < 1.0) || l.fields == 0 {
                bail!("ld4 probe needs 0 < s < 1 and fields >= 1 (got s = {}, fields = {})", l.s, l.fields);
            }
        }
        Ok(())
    }
}
