//! Theorem monitors: energy and Strichartz ratios, the scaling exponent and
//! continuous dependence on the data.

use serde::{Deserialize, Serialize};

use super::data::{DataSpec, InitialData};
use super::diagnostics::DiagnosticsRecord;
use super::exponents::TheoremMode;
use super::picard::PicardRun;
use super::stepper::{Stepper, StepperSettings, StepperState};
use crate::error::{Error, Result};
use crate::norms::{homogeneous_norm, sobolev_norm};
use crate::spectral::Grid;
use crate::Scalar;

/// Induction constant of the small-data energy bound.
pub const SMALL_DATA_ENERGY_FACTOR: f64 = 3.0;

/// Ratios read off a diagnostics record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    /// `|U_0|_{H^{s+1}} + |v_0|_{H^s}`
    pub data_norm: f64,
    /// `R_E(t) = (|U|_{H^{s+1}} + |d_t U|_{H^s}) / data_norm` per row
    pub energy_ratios: Vec<f64>,
    pub energy_ratio: f64,
    pub q: f64,
    /// final `|dF|_{L^q L^inf}` and `|dv|_{L^q L^inf}`
    pub strichartz: [f64; 2],
    /// the same divided by `data_norm`
    pub strichartz_ratios: [f64; 2],
    /// `Some(R_E <= 3)` in small-data mode
    pub small_data_ok: Option<bool>,
}

/// Energy and Strichartz ratios of a run. The first row is the data. A zero
/// run gives zero ratios.
pub fn theorem_monitors(record: &DiagnosticsRecord, mode: TheoremMode) -> Result<TheoremReport> {
    let first = record.rows.first().ok_or_else(|| Error::Parameter("empty diagnostics record".into()))?;
    let data_norm = first.u_norm + first.v_norm;
    let ratio = |x: f64| if data_norm > 0.0 { x / data_norm } else { 0.0 };
    let energy_ratios: Vec<f64> = record.rows.iter().map(|r| ratio(r.u_norm + r.v_norm)).collect();
    let energy_ratio = energy_ratios.iter().copied().fold(0.0, f64::max);
    let last = record.rows.last().unwrap_or(first);
    let strichartz = [last.strichartz_df, last.strichartz_dv];
    let small_data_ok = match mode {
        TheoremMode::SmallData { .. } => Some(energy_ratio <= SMALL_DATA_ENERGY_FACTOR),
        _ => None,
    };
    Ok(TheoremReport {
        data_norm,
        energy_ratios,
        energy_ratio,
        q: record.q,
        strichartz,
        strichartz_ratios: [ratio(strichartz[0]), ratio(strichartz[1])],
        small_data_ok,
    })
}

/// Outcome of a rescaled-data comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub lambda: f64,
    pub s: f64,
    /// `s - n/2`
    pub expected: f64,
    /// times of the base run; the rescaled run is compared at `t / lambda`
    pub times: Vec<f64>,
    /// `log(N_lambda(t / lambda) / N(t)) / log(lambda)` per time, with
    /// `N = |U|_{dot H^{s+1}} + |d_t U|_{dot H^s}`
    pub exponents: Vec<f64>,
    /// the entry of `exponents` farthest from `expected`
    pub worst: f64,
}

fn homogeneous_energy<T: Scalar>(state: &StepperState<T>, s: f64) -> f64 {
    (homogeneous_norm(&state.u, T::lit(s + 1.0)) + homogeneous_norm(&state.v, T::lit(s))).as_f64()
}

/// Runs `spec` on `grid` for `steps` steps, and the data zoomed by `lambda`
/// on a grid refined by `lambda` for the same number of steps of size
/// `dt / lambda`, and measures the exponent of the homogeneous energy.
#[allow(clippy::too_many_arguments)]
pub fn scaling_exponent<T: Scalar>(
    spec: &DataSpec,
    grid: &Grid<T>,
    seed: u64,
    s: f64,
    settings: &StepperSettings<T>,
    steps: usize,
    lambda: usize,
) -> Result<ScalingReport> {
    if lambda < 2 {
        return Err(Error::Parameter(format!("scaling factor {lambda} must be at least 2")));
    }
    let l = lambda as f64;
    let fine = Grid::new(grid.dim(), grid.points_per_axis() * lambda, grid.period())?;
    let zoomed = spec.zoomed(l)?;
    let base = run_states(grid, &spec.generate(grid, seed)?, *settings, steps)?;
    let mut fine_settings = *settings;
    fine_settings.dt = settings.dt / T::lit(l);
    let small = run_states(&fine, &zoomed.generate(&fine, seed)?, fine_settings, steps)?;
    let expected = s - grid.dim() as f64 / 2.0;
    let mut times = Vec::with_capacity(base.len());
    let mut exponents = Vec::with_capacity(base.len());
    for (a, b) in base.iter().zip(&small) {
        let (na, nb) = (homogeneous_energy(a, s), homogeneous_energy(b, s));
        if !(na > 0.0 && nb > 0.0) {
            return Err(Error::Parameter("scaling needs nonzero data".into()));
        }
        times.push(a.t.as_f64());
        exponents.push((nb / na).ln() / l.ln());
    }
    let worst = exponents.iter().copied().fold(expected, |w, e| if (e - expected).abs() > (w - expected).abs() { e } else { w });
    Ok(ScalingReport { lambda: l, s, expected, times, exponents, worst })
}

fn run_states<T: Scalar>(
    grid: &Grid<T>,
    data: &InitialData<T>,
    settings: StepperSettings<T>,
    steps: usize,
) -> Result<Vec<StepperState<T>>> {
    let run = Stepper::new(grid, settings)?.run(StepperState::new(T::zero(), &data.u, &data.v)?, steps);
    if let Some(e) = run.abort {
        return Err(e);
    }
    Ok(run.snapshots)
}

/// Measured Lipschitz constants of the data-to-solution map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependenceReport {
    pub deltas: Vec<f64>,
    /// `sup_t |(U, d_t U)_delta - (U, d_t U)| / |(U_0, v_0)_delta - (U_0, v_0)|`
    /// in `H^{s+1} x H^s`, per delta
    pub constants: Vec<f64>,
}

impl DependenceReport {
    /// `max C / min C` over the deltas.
    pub fn spread(&self) -> f64 {
        let max = self.constants.iter().copied().fold(0.0, f64::max);
        let min = self.constants.iter().copied().fold(f64::INFINITY, f64::min);
        max / min
    }
}

/// Perturbs the data amplitudes of `spec` by the relative factors `1 + delta`
/// (which keeps the data incompressible) and measures the stepper's
/// sensitivity.
pub fn continuous_dependence<T: Scalar>(
    spec: &DataSpec,
    grid: &Grid<T>,
    seed: u64,
    s: f64,
    settings: &StepperSettings<T>,
    steps: usize,
    deltas: &[f64],
) -> Result<DependenceReport> {
    let scaled = |f: f64| -> Result<DataSpec> {
        Ok(match spec.clone() {
            DataSpec::Periodic { amplitude, velocity, modes } => {
                DataSpec::Periodic { amplitude: amplitude * f, velocity: velocity * f, modes }
            }
            DataSpec::Compact { amplitude, velocity, width, zoom } => {
                DataSpec::Compact { amplitude: amplitude * f, velocity: velocity * f, width, zoom }
            }
            DataSpec::Zero => return Err(Error::Parameter("zero data has no amplitude to perturb".into())),
        })
    };
    let base_data = spec.generate(grid, seed)?;
    let base = run_states(grid, &base_data, *settings, steps)?;
    let (s1, s0) = (T::lit(s + 1.0), T::lit(s));
    let mut constants = Vec::with_capacity(deltas.len());
    for &d in deltas {
        let data = scaled(1.0 + d)?.generate(grid, seed)?;
        let den = sobolev_norm(&data.u.sub(&base_data.u)?, s1) + sobolev_norm(&data.v.sub(&base_data.v)?, s0);
        if !(den > T::zero()) {
            return Err(Error::Parameter(format!("perturbation {d} does not change the data")));
        }
        let run = run_states(grid, &data, *settings, steps)?;
        let mut sup = T::zero();
        for (a, b) in base.iter().zip(&run) {
            let num = sobolev_norm(&b.u.sub(&a.u)?, s1) + sobolev_norm(&b.v.sub(&a.v)?, s0);
            sup = sup.max(num);
        }
        constants.push((sup / den).as_f64());
    }
    Ok(DependenceReport { deltas: deltas.to_vec(), constants })
}

/// Distance between the Picard and stepper trajectories on their common
/// sample times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValidationReport {
    pub s: f64,
    pub times: Vec<f64>,
    /// `|G_picard - G_stepper|_{H^s}` per time
    pub g_errors: Vec<f64>,
    /// `|U_picard - U_stepper|_{H^{s+1}}` per time
    pub u_errors: Vec<f64>,
    /// `sup_t |G_p - G_s|_{H^s} / sup_t |G_s|_{H^s}`
    pub relative_g: f64,
    /// `sup_t |U_p - U_s|_{H^{s+1}} / sup_t |U_s|_{H^{s+1}}`
    pub relative_u: f64,
}

impl CrossValidationReport {
    pub fn worst(&self) -> f64 {
        self.relative_g.max(self.relative_u)
    }
}

/// Compares a Picard solution with stepper snapshots in `L^inf_t H^s`.
/// Snapshots are matched to the Picard sample times to `1e-9`; times
/// without a snapshot are skipped.
pub fn cross_validate<T: Scalar>(picard: &PicardRun<T>, stepper: &[StepperState<T>], s: f64) -> Result<CrossValidationReport> {
    let (s0, s1) = (T::lit(s), T::lit(s + 1.0));
    let mut rep = CrossValidationReport {
        s,
        times: Vec::new(),
        g_errors: Vec::new(),
        u_errors: Vec::new(),
        relative_g: 0.0,
        relative_u: 0.0,
    };
    let (mut gmax, mut umax) = (0.0f64, 0.0f64);
    for (j, (&k, t)) in picard.indices.iter().zip(&picard.times).enumerate() {
        let t = t.as_f64();
        let Some(st) = stepper.iter().find(|st| (st.t.as_f64() - t).abs() <= 1e-9 * t.abs().max(1.0)) else {
            continue;
        };
        let g = picard.solution.slice(k)?;
        rep.times.push(t);
        rep.g_errors.push(sobolev_norm(&g.sub(&st.g)?, s0).as_f64());
        rep.u_errors.push(sobolev_norm(&picard.u[j].sub(&st.u)?, s1).as_f64());
        gmax = gmax.max(sobolev_norm(&st.g, s0).as_f64());
        umax = umax.max(sobolev_norm(&st.u, s1).as_f64());
    }
    if rep.times.is_empty() {
        return Err(Error::Mismatch("no stepper snapshot matches a Picard sample time".into()));
    }
    let sup = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    let rel = |e: f64, m: f64| if m > 0.0 { e / m } else { e };
    rep.relative_g = rel(sup(&rep.g_errors), gmax);
    rep.relative_u = rel(sup(&rep.u_errors), umax);
    Ok(rep)
}
