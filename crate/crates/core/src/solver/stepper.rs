//! Method-of-lines integrator for
//!
//! ```text
//! U_tt = Delta U - f_vec + s,      G_tt = Delta G - f_mat + grad s
//! ```
//!
//! with `s` an optional external source. The step is the symmetric
//! exponential midpoint rule in the interaction picture,
//!
//! ```text
//! a = E(h/2) w_n,   w* = a + (h/2) (0, r(w*)),   w_{n+1} = E(h/2) (2 w* - a)
//! ```
//!
//! where `E` is the exact free-wave propagator. Only the velocity slots of
//! `w*` are implicit, so the pressure operator is built once per step. The
//! rule is second order, exact without forcing, and reversible: a step of
//! `-h` undoes a step of `h`.

use num_complex::Complex;

use super::config::StepperConfig;
use super::diagnostics::{strichartz_exponent, DiagnosticsRecord, DiagnosticsRow};
use crate::elasticity::{det_drift, identity_plus, PressureOperator, Spectra};
use crate::error::{Error, Result};
use crate::norms::sobolev_norm;
use crate::scalar::{fabs, Scalar};
use crate::spectral::{derivative_spectrum, propagate_spectra, Field, Grid, Rank};

/// Iteration cap of the implicit midpoint stage.
pub const IMPLICIT_MAX_ITERATIONS: usize = 60;

/// Numerical settings of the stepper.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperSettings<T> {
    /// signed step; negative steps run backwards in time
    pub dt: T,
    pub pressure_tol: T,
    pub implicit_tol: T,
    pub det_budget: T,
    pub record_every: usize,
    /// regularity used by the recorded norms
    pub s: T,
    /// `false` drops the pressure forcing (free waves plus source)
    pub nonlinear: bool,
}

impl<T: Scalar> StepperSettings<T> {
    pub fn from_config(cfg: &StepperConfig, s: f64) -> Self {
        Self {
            dt: T::lit(cfg.dt),
            pressure_tol: T::lit(cfg.pressure_tol),
            implicit_tol: T::lit(cfg.implicit_tol),
            det_budget: T::lit(cfg.det_budget),
            record_every: cfg.record_every.max(1),
            s: T::lit(s),
            nonlinear: true,
        }
    }
}

/// Full integrator state. `g` and `w = d_t g` are evolved alongside `u` and
/// `v`; their distance to `grad u`, `grad v` is the compatibility monitor.
#[derive(Debug, Clone)]
pub struct StepperState<T: Scalar> {
    pub t: T,
    pub step: u64,
    pub u: Field<T>,
    pub v: Field<T>,
    pub g: Field<T>,
    pub w: Field<T>,
    /// last pressure, used as the next initial guess
    pub p: Option<Field<T>>,
    /// running `int |dF|_inf^q` and `int |dv|_inf^q`
    pub strichartz: [T; 2],
}

impl<T: Scalar> StepperState<T> {
    /// State at time `t` with `G = grad U`, `d_t G = grad V`.
    pub fn new(t: T, u: &Field<T>, v: &Field<T>) -> Result<Self> {
        if u.rank() != Rank::Vector || v.rank() != Rank::Vector {
            return Err(Error::Rank { expected: "vector".into(), found: format!("{} / {}", u.rank(), v.rank()) });
        }
        u.grid().check_same(v.grid())?;
        Ok(Self {
            t,
            step: 0,
            u: u.clone(),
            v: v.clone(),
            g: u.gradient()?,
            w: v.gradient()?,
            p: None,
            strichartz: [T::zero(); 2],
        })
    }

    pub fn grid(&self) -> &Grid<T> {
        self.u.grid()
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite() && self.g.is_finite() && self.w.is_finite()
    }
}

/// Trajectory of a stepper run.
#[derive(Debug, Clone)]
pub struct StepperRun<T: Scalar> {
    pub record: DiagnosticsRecord,
    /// states at the recorded times
    pub snapshots: Vec<StepperState<T>>,
    /// last good state
    pub last: StepperState<T>,
    /// why the run stopped early, if it did
    pub abort: Option<Error>,
}

/// External source `t -> s(t)` (a vector field) added to the `U` equation.
pub type Source<'a, T> = Box<dyn Fn(T) -> Result<Field<T>> + 'a>;

pub struct Stepper<'a, T: Scalar> {
    grid: Grid<T>,
    settings: StepperSettings<T>,
    source: Option<Source<'a, T>>,
}

struct Forcing<T: Scalar> {
    ru: Spectra<T>,
    rg: Spectra<T>,
    p: Option<Vec<Complex<T>>>,
    iterations: usize,
    residual: T,
}

fn zeros<T: Scalar>(nc: usize, len: usize) -> Spectra<T> {
    vec![vec![Complex::new(T::zero(), T::zero()); len]; nc]
}

fn norm2<T: Scalar>(s: &Spectra<T>) -> T {
    s.iter().flat_map(|c| c.iter()).fold(T::zero(), |a, c| a + c.norm_sqr())
}

fn axpy<T: Scalar>(x: &Spectra<T>, a: T, y: &Spectra<T>) -> Spectra<T> {
    x.iter().zip(y).map(|(xc, yc)| xc.iter().zip(yc).map(|(p, q)| *p + *q * a).collect()).collect()
}

fn propagate<T: Scalar>(grid: &Grid<T>, u: &Spectra<T>, v: &Spectra<T>, h: T) -> (Spectra<T>, Spectra<T>) {
    u.iter().zip(v).map(|(a, b)| propagate_spectra(grid, a, b, h)).unzip()
}

fn gradient_spectra<T: Scalar>(grid: &Grid<T>, s: &Spectra<T>) -> Spectra<T> {
    let dim = grid.dim();
    let mut out = Vec::with_capacity(s.len() * dim);
    for c in s {
        for a in 0..dim {
            out.push(derivative_spectrum(grid, c, a));
        }
    }
    out
}

fn max_abs_spectra<T: Scalar>(grid: &Grid<T>, s: &Spectra<T>) -> T {
    s.iter().flat_map(|c| grid.to_real(c)).fold(T::zero(), |m, x| m.max(fabs(x)))
}

fn laplacian<T: Scalar>(grid: &Grid<T>, s: &Spectra<T>) -> Spectra<T> {
    s.iter()
        .map(|c| c.iter().enumerate().map(|(idx, v)| *v * -(grid.xi_norm(idx) * grid.xi_norm(idx))).collect())
        .collect()
}

impl<'a, T: Scalar> Stepper<'a, T> {
    pub fn new(grid: &Grid<T>, settings: StepperSettings<T>) -> Result<Self> {
        if settings.dt == T::zero() || !settings.dt.is_finite() {
            return Err(Error::Parameter("stepper dt must be finite and nonzero".into()));
        }
        Ok(Self { grid: grid.clone(), settings, source: None })
    }

    /// Adds the external source `s(t)` to the displacement equation.
    pub fn with_source(mut self, source: Source<'a, T>) -> Self {
        self.source = Some(source);
        self
    }

    pub fn settings(&self) -> &StepperSettings<T> {
        &self.settings
    }

    fn source_spectra(&self, t: T) -> Result<Option<(Spectra<T>, Spectra<T>)>> {
        match &self.source {
            None => Ok(None),
            Some(f) => {
                let s = f(t)?;
                if s.rank() != Rank::Vector {
                    return Err(Error::Rank { expected: "vector".into(), found: s.rank().to_string() });
                }
                self.grid.check_same(s.grid())?;
                let sv = s.spectra().to_vec();
                let sm = gradient_spectra(&self.grid, &sv);
                Ok(Some((sv, sm)))
            }
        }
    }

    /// Right-hand sides `(-f_vec + s, -f_mat + grad s)` at one state.
    fn forcing(
        &self,
        op: Option<&PressureOperator<T>>,
        w: &Spectra<T>,
        ext: &Option<(Spectra<T>, Spectra<T>)>,
        warm: Option<&[Complex<T>]>,
    ) -> Result<Forcing<T>> {
        let dim = self.grid.dim();
        let len = self.grid.len();
        let mut out = Forcing { ru: zeros(dim, len), rg: zeros(dim * dim, len), p: None, iterations: 0, residual: T::zero() };
        if let Some(op) = op {
            let rhs = op.source_spectrum(w);
            let (p, iterations, residual, _) = op.solve_spectrum(&rhs, self.settings.pressure_tol, warm)?;
            let (fv, fm) = op.forcing_spectra(&p);
            out.ru = axpy(&out.ru, -T::one(), &fv);
            out.rg = axpy(&out.rg, -T::one(), &fm);
            out.p = Some(p);
            out.iterations = iterations;
            out.residual = residual;
        }
        if let Some((sv, sm)) = ext {
            out.ru = axpy(&out.ru, T::one(), sv);
            out.rg = axpy(&out.rg, T::one(), sm);
        }
        Ok(out)
    }

    /// Advances one step of size `dt`.
    pub fn step(&self, state: &StepperState<T>) -> Result<StepperState<T>> {
        let grid = &self.grid;
        grid.check_same(state.grid())?;
        let h = self.settings.dt;
        let half = h / T::lit(2.0);
        let (au, av) = propagate(grid, &state.u.spectra().to_vec(), &state.v.spectra().to_vec(), half);
        let (ag, aw) = propagate(grid, &state.g.spectra().to_vec(), &state.w.spectra().to_vec(), half);
        let tm = state.t + half;
        let ext = self.source_spectra(tm)?;
        let op = if self.settings.nonlinear { Some(PressureOperator::from_spectra(grid, &ag)) } else { None };
        let mut warm = state.p.as_ref().map(|p| p.spectra()[0].clone());
        let mut r = self.forcing(None, &aw, &ext, None)?;
        let mut converged = op.is_none();
        let mut change = T::zero();
        let mut iterations = 0;
        while !converged {
            if iterations >= IMPLICIT_MAX_ITERATIONS {
                return Err(Error::ImplicitNotConverged { t: tm.as_f64(), iterations, change: change.as_f64() });
            }
            let ws = axpy(&aw, half, &r.rg);
            let next = self.forcing(op.as_ref(), &ws, &ext, warm.as_deref())?;
            let du = axpy(&next.ru, -T::one(), &r.ru);
            let dg = axpy(&next.rg, -T::one(), &r.rg);
            let scale = norm2(&av) + norm2(&aw) + (norm2(&next.ru) + norm2(&next.rg)) * half * half;
            change = if scale == T::zero() { T::zero() } else { fabs(half) * ((norm2(&du) + norm2(&dg)) / scale).sqrt() };
            warm = next.p.clone();
            r = next;
            iterations += 1;
            converged = change <= self.settings.implicit_tol;
        }
        let (u, v) = propagate(grid, &au, &axpy(&av, h, &r.ru), half);
        let (g, w) = propagate(grid, &ag, &axpy(&aw, h, &r.rg), half);

        // midpoint quadrature of the Strichartz integrands
        let ws = axpy(&aw, half, &r.rg);
        let df = max_abs_spectra(grid, &ws) + max_abs_spectra(grid, &gradient_spectra(grid, &ag));
        let dv = max_abs_spectra(grid, &axpy(&laplacian(grid, &au), T::one(), &r.ru));
        let q = T::lit(strichartz_exponent(grid.dim()));
        let mut strichartz = state.strichartz;
        strichartz[0] += fabs(h) * df.powf(q);
        strichartz[1] += fabs(h) * dv.powf(q);

        let mk = |rank, s| Field::from_spectra(grid, rank, s);
        let p = match warm {
            Some(p) => Some(mk(Rank::Scalar, vec![p])?),
            None => None,
        };
        Ok(StepperState {
            t: state.t + h,
            step: state.step + 1,
            u: mk(Rank::Vector, u)?,
            v: mk(Rank::Vector, v)?,
            g: mk(Rank::Matrix, g)?,
            w: mk(Rank::Matrix, w)?,
            p,
            strichartz,
        })
    }

    /// Diagnostics at the state's own time. Solves the pressure there and
    /// stores it in `state.p`.
    pub fn diagnose(&self, state: &mut StepperState<T>) -> Result<DiagnosticsRow> {
        let grid = &self.grid;
        let s = self.settings.s;
        let ext = self.source_spectra(state.t)?;
        let op = if self.settings.nonlinear { Some(PressureOperator::from_spectra(grid, state.g.spectra())) } else { None };
        let warm = state.p.as_ref().map(|p| p.spectra()[0].clone());
        let r = self.forcing(op.as_ref(), &state.w.spectra().to_vec(), &ext, warm.as_deref())?;
        if let Some(p) = r.p.clone() {
            state.p = Some(Field::from_spectra(grid, Rank::Scalar, vec![p])?);
        }
        let lap = laplacian(grid, &state.u.spectra().to_vec());
        let dv_inf = max_abs_spectra(grid, &axpy(&lap, T::one(), &r.ru));
        let grad_g = gradient_spectra(grid, &state.g.spectra().to_vec());
        let df_inf = state.w.max_abs() + max_abs_spectra(grid, &grad_g);
        let rel = |a: &Field<T>, b: &Field<T>| -> Result<T> {
            let d = a.sub(b)?.max_abs();
            let m = a.max_abs().max(b.max_abs());
            Ok(if m > T::zero() { d / m } else { d })
        };
        let compatibility = rel(&state.g, &state.u.gradient()?)?.max(rel(&state.w, &state.v.gradient()?)?);
        let drift = det_drift(&identity_plus(&state.g)?)?;
        let q = strichartz_exponent(grid.dim());
        Ok(DiagnosticsRow {
            t: state.t.as_f64(),
            u_norm: sobolev_norm(&state.u, s + T::one()).as_f64(),
            v_norm: sobolev_norm(&state.v, s).as_f64(),
            g_norm: sobolev_norm(&state.g, s).as_f64(),
            gt_norm: sobolev_norm(&state.w, s - T::one()).as_f64(),
            det_drift: drift.as_f64(),
            pressure_residual: r.residual.as_f64(),
            pressure_iterations: r.iterations,
            compatibility: compatibility.as_f64(),
            df_inf: df_inf.as_f64(),
            dv_inf: dv_inf.as_f64(),
            strichartz_df: state.strichartz[0].as_f64().powf(1.0 / q),
            strichartz_dv: state.strichartz[1].as_f64().powf(1.0 / q),
        })
    }

    /// Runs `steps` steps from `start`, recording every `record_every` steps.
    /// Runtime failures stop the run and are returned in `abort` together
    /// with the last good state.
    pub fn run(&self, start: StepperState<T>, steps: usize) -> StepperRun<T> {
        self.run_inner(start, steps, true)
    }

    /// Like [`run`](Self::run) but without recording `start`, which is taken
    /// to be the recorded last state of an earlier run. Continuing a run in
    /// pieces whose lengths are multiples of `record_every` reproduces the
    /// uninterrupted run bit for bit.
    pub fn continue_run(&self, start: StepperState<T>, steps: usize) -> StepperRun<T> {
        self.run_inner(start, steps, false)
    }

    fn run_inner(&self, start: StepperState<T>, steps: usize, record_start: bool) -> StepperRun<T> {
        let mut record = DiagnosticsRecord::new(self.grid.dim(), self.settings.s.as_f64());
        let mut snapshots = Vec::new();
        let mut state = start;
        if record_start {
            if let Err(e) = self.record(&mut state, &mut record, &mut snapshots) {
                return StepperRun { record, snapshots, last: state, abort: Some(e) };
            }
        }
        for k in 1..=steps {
            let next = match self.step(&state) {
                Ok(n) => n,
                Err(e) => return StepperRun { record, snapshots, last: state, abort: Some(e) },
            };
            if !next.is_finite() {
                let e = Error::NonFinite { t: next.t.as_f64() };
                return StepperRun { record, snapshots, last: state, abort: Some(e) };
            }
            let drift = match identity_plus(&next.g).and_then(|f| det_drift(&f)) {
                Ok(d) => d,
                Err(e) => return StepperRun { record, snapshots, last: state, abort: Some(e) },
            };
            if drift > self.settings.det_budget {
                let e = Error::ConstraintViolation {
                    t: next.t.as_f64(),
                    drift: drift.as_f64(),
                    budget: self.settings.det_budget.as_f64(),
                };
                return StepperRun { record, snapshots, last: state, abort: Some(e) };
            }
            state = next;
            if k % self.settings.record_every == 0 || k == steps {
                if let Err(e) = self.record(&mut state, &mut record, &mut snapshots) {
                    return StepperRun { record, snapshots, last: state, abort: Some(e) };
                }
            }
        }
        StepperRun { record, snapshots, last: state, abort: None }
    }

    fn record(
        &self,
        state: &mut StepperState<T>,
        record: &mut DiagnosticsRecord,
        snapshots: &mut Vec<StepperState<T>>,
    ) -> Result<()> {
        let row = self.diagnose(state)?;
        record.push(row)?;
        snapshots.push(state.clone());
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::wave_propagator;
    use std::f64::consts::TAU;

    fn settings(dt: f64, nonlinear: bool) -> StepperSettings<f64> {
        StepperSettings {
            dt,
            pressure_tol: 1e-13,
            implicit_tol: 1e-13,
            det_budget: 1.0,
            record_every: 1,
            s: 1.6,
            nonlinear,
        }
    }

    #[test]
    fn linear_steps_match_propagator() {
        let grid = Grid::<f64>::new(2, 16, TAU).unwrap();
        let u = Field::from_fn(&grid, Rank::Vector, |y| vec![0.1 * (y[0] + 2.0 * y[1]).sin(), 0.05 * y[0].cos()]);
        let v = Field::from_fn(&grid, Rank::Vector, |y| vec![0.0, 0.2 * (3.0 * y[1]).sin()]);
        let st = Stepper::new(&grid, settings(0.05, false)).unwrap();
        let run = st.run(StepperState::new(0.0, &u, &v).unwrap(), 20);
        assert!(run.abort.is_none());
        let (ue, ve) = wave_propagator(&u, &v, 1.0).unwrap();
        assert!(run.last.u.sub(&ue).unwrap().max_abs() < 1e-12);
        assert!(run.last.v.sub(&ve).unwrap().max_abs() < 1e-12);
        assert_eq!(run.record.rows.len(), 21);
    }

    #[test]
    fn zero_data_stays_zero() {
        let grid = Grid::<f64>::new(2, 8, TAU).unwrap();
        let z = Field::zeros(&grid, Rank::Vector);
        let run = Stepper::new(&grid, settings(0.1, true)).unwrap().run(StepperState::new(0.0, &z, &z).unwrap(), 5);
        assert!(run.abort.is_none());
        assert_eq!(run.last.u.max_abs(), 0.0);
        assert!(run.record.rows.iter().all(|r| r.u_norm == 0.0 && r.det_drift == 0.0));
    }

    #[test]
    fn backward_step_undoes_forward_step() {
        let grid = Grid::<f64>::new(2, 16, TAU).unwrap();
        let u = Field::from_fn(&grid, Rank::Vector, |y| vec![0.05 * y[1].sin(), 0.03 * (y[0] - y[1]).cos()]);
        let v = Field::from_fn(&grid, Rank::Vector, |y| vec![0.02 * y[1].cos(), 0.04 * y[0].sin()]);
        let fwd = Stepper::new(&grid, settings(0.05, true)).unwrap();
        let bwd = Stepper::new(&grid, settings(-0.05, true)).unwrap();
        let s0 = StepperState::new(0.0, &u, &v).unwrap();
        let s1 = fwd.step(&s0).unwrap();
        assert!(s1.u.sub(&s0.u).unwrap().max_abs() > 1e-4);
        let back = bwd.step(&s1).unwrap();
        assert!(back.u.sub(&u).unwrap().max_abs() < 1e-12);
        assert!(back.v.sub(&v).unwrap().max_abs() < 1e-12);
    }
}
