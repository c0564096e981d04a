//! Run orchestration: solver backends, monitors, probes and output files.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use elastowave::coords::{build_map, ld4_sweep, Ld4Report};
use elastowave::elasticity::gradient_state;
use elastowave::nullforms::{bilinear_probe, product_probe, BilinearProbeConfig, BilinearProbeReport, ProductProbeReport};
use elastowave::solver::{
    cross_validate, theorem_monitors, Backend, CrossValidationReport, DiagnosticsRecord, InitialData, PicardMap,
    PicardSettings, Stepper, StepperSettings, StepperState, TheoremReport,
};
use elastowave::spectral::{Grid, TimeWindow};

use crate::checkpoint::{self, Checkpoint};
use crate::config::RunFile;
use crate::manifest::{now, RunManifest, Timing};
use crate::tables;

pub const STEPPER_TABLE: &str = "diagnostics_stepper.csv";
pub const PICARD_TABLE: &str = "diagnostics_picard.csv";
pub const FACTORS_TABLE: &str = "picard_factors.csv";
pub const MONITORS_FILE: &str = "monitors.json";
pub const PROBES_FILE: &str = "probes.json";
pub const CHECKPOINT_DIR: &str = "checkpoints";

/// Command line overrides of the configuration file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub backend: Option<Backend>,
}

impl Overrides {
    pub fn apply(&self, file: &mut RunFile) {
        if let Some(s) = self.seed {
            file.solver.seed = s;
        }
        if let Some(b) = self.backend {
            file.solver.backend = b;
        }
    }
}

/// Probe families selectable with `probe --suite`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Nullform,
    Product,
    Ld4,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Monitors {
    pub stepper: Option<TheoremReport>,
    pub picard: Option<TheoremReport>,
    pub cross_validation: Option<CrossValidationReport>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProbeReports {
    pub bilinear: Vec<BilinearProbeReport>,
    pub product: Vec<ProductProbeReport>,
    pub ld4: Vec<Ld4Report>,
    /// largest of both ld4 ratios
    pub ld4_max_ratio: Option<f64>,
}

struct Session<'a> {
    dir: &'a Path,
    manifest: RunManifest,
}

impl Session<'_> {
    fn timed<R>(&mut self, phase: &str, f: impl FnOnce(&mut Self) -> anyhow::Result<R>) -> anyhow::Result<R> {
        let start = Instant::now();
        let r = f(self);
        self.manifest.timings.push(Timing { phase: phase.into(), seconds: start.elapsed().as_secs_f64() });
        r
    }

    fn output(&mut self, name: &str, text: &str) -> anyhow::Result<()> {
        let path = self.dir.join(name);
        tables::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        if !self.manifest.outputs.iter().any(|o| o == name) {
            self.manifest.outputs.push(name.to_string());
        }
        Ok(())
    }

    fn json<S: Serialize>(&mut self, name: &str, value: &S) -> anyhow::Result<()> {
        self.output(name, &serde_json::to_string_pretty(value)?)
    }

    fn finish(mut self, result: anyhow::Result<()>) -> anyhow::Result<()> {
        if let Err(e) = &result {
            self.manifest.abort = Some(format!("{e:#}"));
        }
        self.manifest.finished = now();
        self.manifest.write(self.dir)?;
        result
    }

    fn last_checkpoint(&self) -> String {
        match self.manifest.checkpoints.last() {
            Some(c) => self.dir.join(c).display().to_string(),
            None => "none written".into(),
        }
    }
}

fn prepare(dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir.join(CHECKPOINT_DIR)).with_context(|| format!("creating {}", dir.display()))
}

fn grid_of(file: &RunFile) -> anyhow::Result<Grid<f64>> {
    Ok(file.solver.grid.build::<f64>()?)
}

/// Validates `file` and runs the configured backend(s), monitors and probes
/// into the run directory `dir`.
pub fn run(file: &RunFile, dir: &Path) -> anyhow::Result<()> {
    file.validate()?;
    prepare(dir)?;
    let mut session = Session { dir, manifest: RunManifest::new("run", file) };
    session.manifest.write(dir)?;
    let result = run_phases(&mut session, file);
    session.finish(result)
}

fn run_phases(session: &mut Session, file: &RunFile) -> anyhow::Result<()> {
    let cfg = &file.solver;
    let grid = grid_of(file)?;
    let data = session.timed("data", |_| Ok(cfg.data.generate(&grid, cfg.seed)?))?;
    let mut monitors = Monitors::default();
    let both = cfg.backend == Backend::Both;
    let mut snapshots = Vec::new();
    if matches!(cfg.backend, Backend::Stepper | Backend::Both) {
        let stepper = Stepper::new(&grid, StepperSettings::from_config(&cfg.stepper, cfg.s))?;
        let start = StepperState::new(0.0, &data.u, &data.v)?;
        let record = DiagnosticsRecord::new(grid.dim(), cfg.s);
        let (record, snaps) = session.timed("stepper", |s| drive(s, file, &stepper, start, record, true, both))?;
        snapshots = snaps;
        session.output(STEPPER_TABLE, &tables::diagnostics_table(&record))?;
        monitors.stepper = Some(theorem_monitors(&record, cfg.mode)?);
    }
    if matches!(cfg.backend, Backend::Picard | Backend::Both) {
        let picard = session.timed("picard", |_| {
            let map = PicardMap::new(&grid, PicardSettings::from_config(cfg)?, &data)?;
            Ok(map.solve()?)
        })?;
        session.output(PICARD_TABLE, &tables::diagnostics_table(&picard.record))?;
        session.output(FACTORS_TABLE, &tables::factors_table(&picard.factors))?;
        monitors.picard = Some(theorem_monitors(&picard.record, cfg.mode)?);
        if both {
            monitors.cross_validation =
                Some(session.timed("cross_validation", |_| Ok(cross_validate(&picard, &snapshots, cfg.s)?))?);
        }
    }
    session.json(MONITORS_FILE, &monitors)?;
    let reports = session.timed("probes", |_| probes(file, &data, &[Suite::Nullform, Suite::Product, Suite::Ld4]))?;
    session.json(PROBES_FILE, &reports)?;
    Ok(())
}

fn checkpoint_name(step: u64) -> String {
    format!("{CHECKPOINT_DIR}/step_{step:010}.nhck")
}

/// Steps in chunks of `checkpoint_every`, writing a checkpoint and the
/// manifest after each chunk. Runtime failures write the last good state
/// and report both checkpoint paths.
fn drive(
    session: &mut Session,
    file: &RunFile,
    stepper: &Stepper<f64>,
    mut state: StepperState<f64>,
    mut record: DiagnosticsRecord,
    fresh: bool,
    keep: bool,
) -> anyhow::Result<(DiagnosticsRecord, Vec<StepperState<f64>>)> {
    let total = file.solver.stepper.steps as u64;
    let every = file.output.checkpoint_every as u64;
    let mut snapshots = Vec::new();
    let mut first = fresh;
    while first || state.step < total {
        let chunk = every.min(total - state.step) as usize;
        let run = if first { stepper.run(state, chunk) } else { stepper.continue_run(state, chunk) };
        first = false;
        for row in &run.record.rows {
            record.push(*row)?;
        }
        if keep {
            snapshots.extend(run.snapshots);
        }
        state = run.last;
        if let Some(err) = run.abort {
            let last = session.last_checkpoint();
            let name = format!("{CHECKPOINT_DIR}/abort_step_{:010}.nhck", state.step);
            let ck = Checkpoint { state, record: record.clone() };
            checkpoint::write(&session.dir.join(&name), &ck)?;
            session.output(STEPPER_TABLE, &tables::diagnostics_table(&record))?;
            bail!(
                "stepper aborted: {err}; last checkpoint {last}; last good state in {}",
                session.dir.join(name).display()
            );
        }
        let name = checkpoint_name(state.step);
        let ck = Checkpoint { state, record };
        checkpoint::write(&session.dir.join(&name), &ck)?;
        (state, record) = (ck.state, ck.record);
        if !session.manifest.checkpoints.contains(&name) {
            session.manifest.checkpoints.push(name);
        }
        session.manifest.write(session.dir)?;
        if chunk == 0 {
            break;
        }
    }
    Ok((record, snapshots))
}

/// Continues the stepper of the run in `dir` from `from` (default: the
/// last checkpoint in its manifest) to the configured step count and
/// rewrites the stepper table and monitors.
pub fn resume(dir: &Path, from: Option<&Path>) -> anyhow::Result<()> {
    let previous = RunManifest::read(dir)?;
    let file = previous.config.clone();
    file.validate()?;
    if file.solver.backend == Backend::Picard {
        bail!("the run in {} has no stepper trajectory to resume", dir.display());
    }
    let path: PathBuf = match from {
        Some(p) => p.to_path_buf(),
        None => dir.join(previous.checkpoints.last().context("the manifest lists no checkpoint")?),
    };
    let ck = checkpoint::read(&path).with_context(|| format!("restoring {}", path.display()))?;
    let g = &file.solver.grid;
    let cg = ck.state.grid();
    if (cg.dim(), cg.points_per_axis(), cg.period()) != (g.dim, g.points_per_axis, g.period) {
        bail!("checkpoint {} does not match the configured grid", path.display());
    }
    let mut manifest = previous;
    manifest.command = "resume".into();
    manifest.abort = None;
    let mut session = Session { dir, manifest };
    let result = (|| {
        let grid = grid_of(&file)?;
        let stepper = Stepper::new(&grid, StepperSettings::from_config(&file.solver.stepper, file.solver.s))?;
        let (record, _) =
            session.timed("stepper_resume", |s| drive(s, &file, &stepper, ck.state, ck.record, false, false))?;
        session.output(STEPPER_TABLE, &tables::diagnostics_table(&record))?;
        let mut monitors: Monitors = std::fs::read_to_string(dir.join(MONITORS_FILE))
            .ok()
            .and_then(|t| serde_json::from_str(&t).ok())
            .unwrap_or_default();
        monitors.stepper = Some(theorem_monitors(&record, file.solver.mode)?);
        session.json(MONITORS_FILE, &monitors)
    })();
    session.finish(result)
}

/// Runs probe suites without the solver.
pub fn probe(file: &RunFile, dir: &Path, suites: &[Suite]) -> anyhow::Result<()> {
    file.validate()?;
    prepare(dir)?;
    let mut session = Session { dir, manifest: RunManifest::new("probe", file) };
    let result = (|| {
        let grid = grid_of(file)?;
        let data = file.solver.data.generate(&grid, file.solver.seed)?;
        let reports = session.timed("probes", |_| probes(file, &data, suites))?;
        session.json(PROBES_FILE, &reports)
    })();
    session.finish(result)
}

fn probes(file: &RunFile, data: &InitialData<f64>, suites: &[Suite]) -> anyhow::Result<ProbeReports> {
    let cfg = &file.solver;
    let mut out = ProbeReports::default();
    if let (Some(b), true) = (&file.probes.bilinear, suites.contains(&Suite::Nullform)) {
        for &scale in &b.scales {
            let pc = BilinearProbeConfig {
                dim: cfg.grid.dim,
                scale,
                s: cfg.s,
                theta: cfg.theta,
                epsilon: cfg.epsilon,
                samples: b.samples,
                ensemble: b.ensemble,
                seed: cfg.seed,
            };
            out.bilinear.push(bilinear_probe::<f64>(&pc).with_context(|| format!("bilinear probe at scale {scale}"))?);
        }
    }
    if let (Some(p), true) = (&file.probes.product, suites.contains(&Suite::Product)) {
        let pgrid = Grid::<f64>::new(cfg.grid.dim, p.points_per_axis, cfg.grid.period)?;
        let window = TimeWindow::new(0.0, cfg.grid.period, p.time_samples)?;
        for (k, e) in p.estimates.iter().enumerate() {
            out.product.push(product_probe(*e, &pgrid, window, p.samples, cfg.seed + k as u64)?);
        }
    }
    if let (Some(l), true) = (&file.probes.ld4, suites.contains(&Suite::Ld4)) {
        let map = build_map(&gradient_state(0.0, &data.u, &data.v, None)?).context("ld4 probe map")?;
        out.ld4 = ld4_sweep(&map, l.s, l.fields, cfg.seed)?;
        out.ld4_max_ratio = out.ld4.iter().map(|r| r.ratio_forward.max(r.ratio_backward)).reduce(f64::max);
    }
    Ok(out)
}

/// Plain-text summary of a run directory.
pub fn report(dir: &Path) -> anyhow::Result<String> {
    let m = RunManifest::read(dir)?;
    let mut out = format!(
        "{} run, version {}, n = {}, N = {}, seed = {}\n",
        m.command, m.version, m.grid.dim, m.grid.points_per_axis, m.seed
    );
    for t in &m.timings {
        out += &format!("  {:<18} {:>10.3} s\n", t.phase, t.seconds);
    }
    for name in [STEPPER_TABLE, PICARD_TABLE] {
        if let Ok(text) = std::fs::read_to_string(dir.join(name)) {
            let rows = tables::parse_diagnostics(&text)?;
            out += &format!("{name}: {} rows", rows.len());
            if let Some(last) = rows.last() {
                out += &format!(", final t = {}, det drift = {:e}", last[0], last[5]);
            }
            out.push('\n');
        }
    }
    if let Ok(text) = std::fs::read_to_string(dir.join(MONITORS_FILE)) {
        let mon: Monitors = serde_json::from_str(&text)?;
        for (name, r) in [("stepper", &mon.stepper), ("picard", &mon.picard)] {
            if let Some(r) = r {
                out += &format!(
                    "{name}: energy ratio {:.6}, strichartz {:e} {:e}\n",
                    r.energy_ratio, r.strichartz[0], r.strichartz[1]
                );
            }
        }
        if let Some(c) = &mon.cross_validation {
            out += &format!("cross validation: relative G {:e}, relative U {:e}\n", c.relative_g, c.relative_u);
        }
    }
    out += &format!("checkpoints: {}\n", m.checkpoints.len());
    if let Some(a) = &m.abort {
        out += &format!("aborted: {a}\n");
    }
    Ok(out)
}
