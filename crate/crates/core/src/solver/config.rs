use serde::{Deserialize, Serialize};

use super::data::DataSpec;
use super::exponents::{validate_regularity, validate_space_time, TheoremMode};
use crate::error::{Error, Result};
use crate::spectral::Grid;
use crate::Scalar;

/// Which solution backend(s) a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Picard,
    Stepper,
    Both,
}

impl std::str::FromStr for Backend {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "picard" => Ok(Self::Picard),
            "stepper" => Ok(Self::Stepper),
            "both" => Ok(Self::Both),
            other => Err(Error::Parameter(format!("unknown backend {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    pub points_per_axis: usize,
    pub period: f64,
}

impl GridConfig {
    pub fn build<T: Scalar>(&self) -> Result<Grid<T>> {
        Grid::new(self.dim, self.points_per_axis, T::lit(self.period))
    }
}

/// How the Duhamel integral of the near-cone forcing is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DuhamelRule {
    /// exact integration of the trigonometric interpolant in time
    Spectral,
    /// four-point Gauss-Lobatto rule on every slice interval
    GaussLobatto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PicardConfig {
    pub max_iters: usize,
    /// stop when `|G_{k+1} - G_k| <= contraction_tol * |G_1 - G_0|`
    pub contraction_tol: f64,
    /// time samples over the window `[-window/2, window/2)`
    pub time_samples: usize,
    pub window: f64,
    pub pressure_tol: f64,
    pub duhamel: DuhamelRule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepperConfig {
    pub dt: f64,
    pub steps: usize,
    pub pressure_tol: f64,
    /// relative tolerance of the implicit midpoint iteration
    pub implicit_tol: f64,
    /// abort when `max |det F - 1|` exceeds this
    pub det_budget: f64,
    /// emit a diagnostics row every `record_every` steps
    pub record_every: usize,
}

/// Full solver configuration. Every tolerance is explicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub s: f64,
    pub theta: f64,
    pub epsilon: f64,
    /// existence window `T` of the Picard map
    pub existence_time: f64,
    pub mode: TheoremMode,
    pub backend: Backend,
    pub picard: PicardConfig,
    pub stepper: StepperConfig,
    /// working-space radii of the two contraction arguments
    pub c1: f64,
    pub c2: f64,
    pub data: DataSpec,
    /// seed of the random data coefficients
    #[serde(default)]
    pub seed: u64,
}

impl RunConfig {
    /// Checks every parameter constraint, naming the violated one.
    pub fn validate(&self) -> Result<()> {
        let n = self.grid.dim;
        if !(2..=3).contains(&n) {
            return Err(Error::Parameter(format!("dimension {n} not in {{2, 3}}")));
        }
        validate_regularity(n, self.s, self.mode)?;
        validate_space_time(self.theta, self.epsilon)?;
        let xi_max = std::f64::consts::TAU / self.grid.period * (self.grid.points_per_axis / 2) as f64 * (n as f64).sqrt();
        if matches!(self.backend, Backend::Picard | Backend::Both) {
            let t = self.existence_time;
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::Parameter(format!("existence_time = {t} must lie in (0, 1) for the picard backend")));
            }
            let p = &self.picard;
            if p.max_iters == 0 || !(p.contraction_tol > 0.0) || !(p.pressure_tol > 0.0) {
                return Err(Error::Parameter("picard tolerances and max_iters must be positive".into()));
            }
            if !(p.window >= 4.0 * 1.9) {
                return Err(Error::Parameter(format!(
                    "picard window {} must hold the cutoff support, at least 7.6",
                    p.window
                )));
            }
            // the forcing is at least quadratic, so its time spectrum reaches 2 |xi_max| and beyond
            let dt = p.window / p.time_samples as f64;
            if p.time_samples % 2 != 0 || dt * xi_max > 0.5 {
                return Err(Error::Parameter(format!(
                    "picard time_samples = {} must be even with window / time_samples * |xi_max| <= 0.5 (got {:.3})",
                    p.time_samples,
                    dt * xi_max
                )));
            }
        }
        if matches!(self.backend, Backend::Stepper | Backend::Both) {
            let st = &self.stepper;
            if st.dt == 0.0 || !st.dt.is_finite() {
                return Err(Error::Parameter("stepper dt must be finite and nonzero".into()));
            }
            if !(st.pressure_tol > 0.0 && st.implicit_tol > 0.0 && st.det_budget > 0.0) || st.record_every == 0 {
                return Err(Error::Parameter("stepper tolerances and record_every must be positive".into()));
            }
            if st.dt.abs() * xi_max > 0.5 {
                return Err(Error::Parameter(format!(
                    "stepper dt = {} does not resolve the grid: dt * |xi_max| = {:.3} > 0.5",
                    st.dt,
                    st.dt.abs() * xi_max
                )));
            }
        }
        if self.backend == Backend::Both {
            let spacing = self.picard.window / self.picard.time_samples as f64;
            let every = self.stepper.dt * self.stepper.record_every as f64;
            if !((every - spacing).abs() <= 1e-9 * spacing) {
                return Err(Error::Parameter(format!(
                    "backend both compares the trajectories at common times: stepper dt * record_every = {every} must equal picard window / time_samples = {spacing}"
                )));
            }
            if (self.stepper.steps as f64) * self.stepper.dt < self.existence_time - 1e-12 {
                return Err(Error::Parameter(format!(
                    "backend both needs stepper steps * dt >= existence_time = {}",
                    self.existence_time
                )));
            }
        }
        Grid::<f64>::new(n, self.grid.points_per_axis, self.grid.period)?;
        self.data.validate(n)?;
        Ok(())
    }
}
