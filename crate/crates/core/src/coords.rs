//! Lagrangian and Eulerian frames: the inverse of `x = y + U(t, y)`,
//! transport of fields between the frames, residuals of the Eulerian system
//! and the frame equivalence of `H^s` norms for `0 < s < 1`.
//!
//! Both frames use the same periodic grid. Off-grid values come from the
//! trigonometric interpolant, so every composition costs `O(N^{2n})`.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::elasticity::DeformationState;
use crate::error::{Error, Result};
use crate::norms::gagliardo_seminorm;
use crate::spectral::{Field, Grid, Rank};
use crate::Scalar;

/// Iteration cap of the inverse-map fixed point.
pub const MAP_MAX_ITERATIONS: usize = 200;

/// Largest ratio [`ld4_check`] accepts; the constants of the norm equivalence
/// are not explicit, this is the regression bound of the measured ones.
pub const LD4_REGRESSION_CONSTANT: f64 = 2.0;

/// Evaluates the trigonometric interpolants of several fields at arbitrary
/// points.
struct Interpolant<'a, T: Scalar> {
    grid: &'a Grid<T>,
    coefs: Vec<Vec<Complex<T>>>,
    kint: Vec<T>,
}

impl<'a, T: Scalar> Interpolant<'a, T> {
    fn new(grid: &'a Grid<T>, spectra: &[Vec<Complex<T>>]) -> Self {
        let n = grid.points_per_axis();
        let scale = T::one() / T::usz(grid.len());
        let coefs = spectra.iter().map(|s| s.iter().map(|c| *c * scale).collect()).collect();
        let half = (n / 2) as i64;
        let kint = (0..n as i64).map(|j| T::lit(if j <= half { j } else { j - n as i64 } as f64)).collect();
        Interpolant { grid, coefs, kint }
    }

    fn contract(coefs: &[Complex<T>], phases: &[Vec<Complex<T>>]) -> Complex<T> {
        let (first, rest) = phases.split_first().expect("at least one axis");
        if rest.is_empty() {
            return coefs.iter().zip(first).fold(Complex::new(T::zero(), T::zero()), |a, (c, e)| a + *c * *e);
        }
        let stride = coefs.len() / first.len();
        first
            .iter()
            .enumerate()
            .fold(Complex::new(T::zero(), T::zero()), |a, (j, e)| {
                a + *e * Self::contract(&coefs[j * stride..(j + 1) * stride], rest)
            })
    }

    /// Values of every component at `points` (one `dim`-vector per point).
    fn eval(&self, points: &[[T; 3]]) -> Vec<Vec<T>> {
        let dim = self.grid.dim();
        let unit = self.grid.unit_wavenumber();
        let mut out = vec![Vec::with_capacity(points.len()); self.coefs.len()];
        let mut phases: Vec<Vec<Complex<T>>> = vec![Vec::new(); dim];
        for p in points {
            for (a, ph) in phases.iter_mut().enumerate() {
                ph.clear();
                ph.extend(self.kint.iter().map(|&k| {
                    let arg = k * unit * p[a];
                    Complex::new(arg.cos(), arg.sin())
                }));
            }
            for (c, o) in self.coefs.iter().zip(out.iter_mut()) {
                o.push(Self::contract(c, &phases).re);
            }
        }
        out
    }
}

fn grid_points<T: Scalar>(grid: &Grid<T>) -> Vec<[T; 3]> {
    (0..grid.len()).map(|i| grid.point(i)).collect()
}

/// `points + shift` with `shift` a vector field on the same grid.
fn displaced<T: Scalar>(grid: &Grid<T>, shift: &Field<T>) -> Vec<[T; 3]> {
    let mut pts = grid_points(grid);
    for (a, c) in shift.components().iter().enumerate() {
        for (p, d) in pts.iter_mut().zip(c) {
            p[a] += *d;
        }
    }
    pts
}

fn evaluate_at<T: Scalar>(f: &Field<T>, points: &[[T; 3]]) -> Result<Field<T>> {
    let comps = Interpolant::new(f.grid(), f.spectra()).eval(points);
    Field::from_components(f.grid(), f.rank(), comps)
}

/// Spectral norm (largest singular value) of a row-major `dim x dim` matrix.
fn spectral_norm<T: Scalar>(m: &[T], dim: usize) -> T {
    // entries of the symmetric A = M^T M
    let a = |i: usize, j: usize| (0..dim).fold(T::zero(), |s, k| s + m[k * dim + i] * m[k * dim + j]);
    let two = T::lit(2.0);
    let lmax = match dim {
        1 => a(0, 0),
        2 => {
            let (p, q, r) = (a(0, 0), a(0, 1), a(1, 1));
            let tr = p + r;
            let disc = ((p - r) * (p - r) + T::lit(4.0) * q * q).sqrt();
            (tr + disc) / two
        }
        _ => {
            let (a00, a01, a02, a11, a12, a22) = (a(0, 0), a(0, 1), a(0, 2), a(1, 1), a(1, 2), a(2, 2));
            let p1 = a01 * a01 + a02 * a02 + a12 * a12;
            let q = (a00 + a11 + a22) / T::lit(3.0);
            if p1 <= T::epsilon() * q * q {
                a00.max(a11).max(a22)
            } else {
                let p2 = (a00 - q).powi(2) + (a11 - q).powi(2) + (a22 - q).powi(2) + two * p1;
                let p = (p2 / T::lit(6.0)).sqrt();
                let (b00, b11, b22) = ((a00 - q) / p, (a11 - q) / p, (a22 - q) / p);
                let (b01, b02, b12) = (a01 / p, a02 / p, a12 / p);
                let det = b00 * (b11 * b22 - b12 * b12) - b01 * (b01 * b22 - b12 * b02) + b02 * (b01 * b12 - b11 * b02);
                let r = (det / two).max(-T::one()).min(T::one());
                q + two * p * (r.acos() / T::lit(3.0)).cos()
            }
        }
    };
    lmax.max(T::zero()).sqrt()
}

/// `max_y |M(y)|` in the spectral (operator) norm of a matrix field.
pub fn max_operator_norm<T: Scalar>(m: &Field<T>) -> Result<T> {
    if m.rank() != Rank::Matrix {
        return Err(Error::Rank { expected: "matrix".into(), found: m.rank().to_string() });
    }
    let dim = m.grid().dim();
    let mut buf = vec![T::zero(); dim * dim];
    let mut worst = T::zero();
    for idx in 0..m.grid().len() {
        for (b, c) in buf.iter_mut().zip(m.components()) {
            *b = c[idx];
        }
        worst = worst.max(spectral_norm(&buf, dim));
    }
    Ok(worst)
}

/// The map `x(t, y) = y + U(t, y)` and its inverse at one time.
#[derive(Debug, Clone)]
pub struct CoordinateMap<T: Scalar> {
    pub t: T,
    /// `U(y)` on the Lagrangian grid
    pub forward: Field<T>,
    /// `W(x) = y(x) - x` on the Euler grid
    pub inverse: Field<T>,
    /// `F = dx/dy` on the Lagrangian grid
    pub jacobian: Field<T>,
    /// `F^{-1}` pushed to the Euler grid
    pub inverse_jacobian: Field<T>,
    /// `max |dx/dy|` (operator norm)
    pub jacobian_inf: T,
    /// `max |dy/dx|` (operator norm)
    pub inverse_jacobian_inf: T,
    /// fixed-point iterations used for the inverse
    pub iterations: usize,
}

impl<T: Scalar> CoordinateMap<T> {
    pub fn grid(&self) -> &Grid<T> {
        self.forward.grid()
    }

    /// `max_x |W(x) + U(x + W(x))|`: how well the inverse undoes the map.
    pub fn inverse_defect(&self) -> Result<T> {
        let u = evaluate_at(&self.forward, &displaced(self.grid(), &self.inverse))?;
        Ok(self.inverse.add(&u)?.max_abs())
    }

    /// `max_y |U(y) + W(y + U(y))|`: the composition in the other order.
    pub fn forward_defect(&self) -> Result<T> {
        let w = evaluate_at(&self.inverse, &displaced(self.grid(), &self.forward))?;
        Ok(self.forward.add(&w)?.max_abs())
    }
}

/// Inverts `x = y + U(y)` by the fixed point `W <- -U(x + W)`, damped by 1/2
/// once the increments stop decreasing.
pub fn build_map<T: Scalar>(state: &DeformationState<T>) -> Result<CoordinateMap<T>> {
    let grid = state.u.grid();
    let grad_inf = max_operator_norm(&state.g)?;
    if !(grad_inf < T::one()) {
        return Err(Error::MapNotInvertible { grad_inf: grad_inf.as_f64() });
    }
    let interp = Interpolant::new(grid, state.u.spectra());
    let tol = T::epsilon() * T::lit(64.0) * grid.period();
    let mut w = state.u.scale(-T::one());
    let mut damping = T::one();
    let mut last = T::infinity();
    let mut iterations = 0;
    loop {
        if iterations == MAP_MAX_ITERATIONS {
            return Err(Error::MapNotInvertible { grad_inf: grad_inf.as_f64() });
        }
        iterations += 1;
        let target = interp.eval(&displaced(grid, &w));
        let mut change = T::zero();
        let comps: Vec<Vec<T>> = w
            .components()
            .iter()
            .zip(&target)
            .map(|(c, u)| {
                c.iter()
                    .zip(u)
                    .map(|(&wi, &ui)| {
                        let d = -ui - wi;
                        change = change.max(d.abs());
                        wi + damping * d
                    })
                    .collect()
            })
            .collect();
        if !change.is_finite() {
            return Err(Error::MapNotInvertible { grad_inf: grad_inf.as_f64() });
        }
        w = Field::from_components(grid, Rank::Vector, comps)?;
        if change <= tol {
            break;
        }
        if change >= last {
            damping = T::lit(0.5);
        }
        last = change;
    }
    let inverse_jacobian = evaluate_at(&state.finv, &displaced(grid, &w))?;
    Ok(CoordinateMap {
        t: state.t,
        forward: state.u.clone(),
        inverse: w,
        jacobian: state.f.clone(),
        inverse_jacobian_inf: max_operator_norm(&state.finv)?,
        inverse_jacobian,
        jacobian_inf: max_operator_norm(&state.f)?,
        iterations,
    })
}

/// Lagrangian field `f(y)` to the Euler frame: `f(y(x))`.
pub fn push_forward<T: Scalar>(f: &Field<T>, map: &CoordinateMap<T>) -> Result<Field<T>> {
    f.grid().check_same(map.grid())?;
    evaluate_at(f, &displaced(map.grid(), &map.inverse))
}

/// Euler field `g(x)` to the Lagrangian frame: `g(y + U(y))`.
pub fn pull_back<T: Scalar>(g: &Field<T>, map: &CoordinateMap<T>) -> Result<Field<T>> {
    g.grid().check_same(map.grid())?;
    evaluate_at(g, &displaced(map.grid(), &map.forward))
}

/// `L^2` norms of the Eulerian residuals at the interior slices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EulerResidualReport {
    pub times: Vec<f64>,
    /// `d_t v + v.grad v - F^{kb} d_k F^{.b} + grad p`
    pub momentum: Vec<f64>,
    /// `d_t F + v.grad F - F^{ka} d_k v`
    pub deformation: Vec<f64>,
    pub div_v: Vec<f64>,
    /// columnwise `d_i F^{ia}`
    pub div_f: Vec<f64>,
}

impl EulerResidualReport {
    /// `[momentum, deformation, div v, div F]`, each maximised over time.
    pub fn max(&self) -> [f64; 4] {
        let m = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
        [m(&self.momentum), m(&self.deformation), m(&self.div_v), m(&self.div_f)]
    }

    /// The same maxima restricted to the sample times that match one of
    /// `times` to `1e-9`. Comparing two refinements at the coarse run's
    /// times keeps the later times of the finer run out of the comparison.
    pub fn max_over(&self, times: &[f64]) -> [f64; 4] {
        let keep: Vec<bool> = self.times.iter().map(|t| times.iter().any(|s| (s - t).abs() <= 1e-9)).collect();
        let m = |v: &[f64]| v.iter().zip(&keep).filter(|(_, k)| **k).map(|(x, _)| *x).fold(0.0, f64::max);
        [m(&self.momentum), m(&self.deformation), m(&self.div_v), m(&self.div_f)]
    }
}

/// Convergence order `log2(coarse / fine)` of a quantity under halving.
pub fn convergence_order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

struct EulerSlice<T: Scalar> {
    v: Field<T>,
    f: Field<T>,
    p: Field<T>,
}

/// Pushes `v`, `F` and `p` of consecutive, evenly spaced states to the Euler
/// grid and evaluates the residuals of the Eulerian system, with `d_t` by
/// centred differences. Every state needs its pressure.
pub fn euler_residual<T: Scalar>(states: &[DeformationState<T>], maps: &[CoordinateMap<T>]) -> Result<EulerResidualReport> {
    if states.len() < 3 || states.len() != maps.len() {
        return Err(Error::Parameter(format!(
            "Euler residual needs at least 3 states with one map each (got {} states, {} maps)",
            states.len(),
            maps.len()
        )));
    }
    let dt = states[1].t - states[0].t;
    for pair in states.windows(2) {
        if !((pair[1].t - pair[0].t - dt).abs() <= T::lit(1e-9) * dt.abs()) || dt == T::zero() {
            return Err(Error::Parameter("Euler residual needs evenly spaced states".into()));
        }
    }
    let slices = states
        .iter()
        .zip(maps)
        .map(|(s, m)| {
            let p = s.p.as_ref().ok_or_else(|| Error::Parameter(format!("state at t = {} has no pressure", s.t)))?;
            Ok(EulerSlice { v: push_forward(&s.v, m)?, f: push_forward(&s.f, m)?, p: push_forward(p, m)? })
        })
        .collect::<Result<Vec<_>>>()?;
    let grid = states[0].u.grid();
    let dim = grid.dim();
    let len = grid.len();
    let mut report = EulerResidualReport {
        times: Vec::new(),
        momentum: Vec::new(),
        deformation: Vec::new(),
        div_v: Vec::new(),
        div_f: Vec::new(),
    };
    let two_dt = dt + dt;
    for k in 1..slices.len() - 1 {
        let (prev, cur, next) = (&slices[k - 1], &slices[k], &slices[k + 1]);
        let dv = cur.v.gradient()?;
        let dp = cur.p.gradient()?;
        // dF[(i * dim + b) * dim + k] = d_k F^{ib}
        let df: Vec<Field<T>> = (0..dim * dim)
            .map(|c| Field::from_components(grid, Rank::Scalar, vec![cur.f.components()[c].clone()])?.gradient())
            .collect::<Result<_>>()?;
        let dfk = |i: usize, b: usize, kk: usize| &df[i * dim + b].components()[kk];
        let v = cur.v.components();
        let f = cur.f.components();
        let mut mom = vec![vec![T::zero(); len]; dim];
        let mut def = vec![vec![T::zero(); len]; dim * dim];
        let mut divv = vec![T::zero(); len];
        let mut divf = vec![vec![T::zero(); len]; dim];
        for x in 0..len {
            for i in 0..dim {
                let mut r = (next.v.components()[i][x] - prev.v.components()[i][x]) / two_dt + dp.components()[i][x];
                for j in 0..dim {
                    r += v[j][x] * dv.entry(i, j)[x];
                    for b in 0..dim {
                        r -= f[j * dim + b][x] * dfk(i, b, j)[x];
                    }
                }
                mom[i][x] = r;
                for a in 0..dim {
                    let c = i * dim + a;
                    let mut r = (next.f.components()[c][x] - prev.f.components()[c][x]) / two_dt;
                    for j in 0..dim {
                        r += v[j][x] * dfk(i, a, j)[x] - f[j * dim + a][x] * dv.entry(i, j)[x];
                    }
                    def[c][x] = r;
                    divf[a][x] += dfk(i, a, i)[x];
                }
                divv[x] += dv.entry(i, i)[x];
            }
        }
        let norm = |rank: Rank, comps: Vec<Vec<T>>| -> Result<f64> {
            Ok(Field::from_components(grid, rank, comps)?.l2_norm().as_f64())
        };
        report.times.push(states[k].t.as_f64());
        report.momentum.push(norm(Rank::Vector, mom)?);
        report.deformation.push(norm(Rank::Matrix, def)?);
        report.div_v.push(norm(Rank::Scalar, vec![divv])?);
        report.div_f.push(norm(Rank::Vector, divf)?);
    }
    Ok(report)
}

/// Both sides of the frame equivalence of `H^s` norms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ld4Report {
    pub s: f64,
    /// `|u|_{H^s(y)}`, Gagliardo seminorm plus `L^2`
    pub lagrangian_norm: f64,
    /// `|u bar|_{H^s(x)}`
    pub euler_norm: f64,
    pub jacobian_inf: f64,
    pub inverse_jacobian_inf: f64,
    /// `|u|_y / (|dx/dy|^{n/2+s} |u bar|_x)`
    pub ratio_forward: f64,
    /// `|u bar|_x / (|dy/dx|^{n/2+s} |u|_y)`
    pub ratio_backward: f64,
    /// both ratios finite and at most [`LD4_REGRESSION_CONSTANT`]
    pub within: bool,
}

fn gagliardo_hs<T: Scalar>(f: &Field<T>, s: T) -> Result<T> {
    let l2 = f.l2_norm();
    let semi = gagliardo_seminorm(f, s)?;
    Ok((l2 * l2 + semi * semi).sqrt())
}

/// Compares `|u|_{H^s}` in the two frames for `0 < s < 1`.
pub fn ld4_check<T: Scalar>(f: &Field<T>, map: &CoordinateMap<T>, s: f64) -> Result<Ld4Report> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Parameter(format!("frame equivalence exponent {s} must lie in (0, 1)")));
    }
    let st = T::lit(s);
    let bar = push_forward(f, map)?;
    let ly = gagliardo_hs(f, st)?.as_f64();
    let lx = gagliardo_hs(&bar, st)?.as_f64();
    let p = f.grid().dim() as f64 / 2.0 + s;
    let (a, b) = (map.jacobian_inf.as_f64(), map.inverse_jacobian_inf.as_f64());
    let ratio = |num: f64, den: f64| if num == 0.0 { 0.0 } else { num / den };
    let ratio_forward = ratio(ly, a.powf(p) * lx);
    let ratio_backward = ratio(lx, b.powf(p) * ly);
    let ok = |r: f64| r.is_finite() && r <= LD4_REGRESSION_CONSTANT;
    Ok(Ld4Report {
        s,
        lagrangian_norm: ly,
        euler_norm: lx,
        jacobian_inf: a,
        inverse_jacobian_inf: b,
        ratio_forward,
        ratio_backward,
        within: ok(ratio_forward) && ok(ratio_backward),
    })
}

/// Scalar field with eight random lattice modes up to `kmax`, amplitudes
/// decaying like `1 / <k>`.
pub fn random_field<T: Scalar>(grid: &Grid<T>, kmax: i64, rng: &mut ChaCha8Rng) -> Field<T> {
    let dim = grid.dim();
    let unit = grid.unit_wavenumber().as_f64();
    let modes: Vec<(Vec<f64>, f64, f64)> = (0..8)
        .map(|_| {
            let k: Vec<f64> = (0..dim).map(|_| rng.random_range(-kmax..=kmax) as f64 * unit).collect();
            let r = k.iter().map(|x| x * x).sum::<f64>().sqrt();
            (k, rng.random_range(-1.0..1.0) / (1.0 + r), rng.random_range(0.0..std::f64::consts::TAU))
        })
        .collect();
    Field::scalar_fn(grid, |y| {
        let v: f64 = modes
            .iter()
            .map(|(k, a, ph)| a * (k.iter().zip(y).map(|(p, q)| p * q.as_f64()).sum::<f64>() + ph).cos())
            .sum();
        T::lit(v)
    })
}

/// [`ld4_check`] on `fields` seeded [`random_field`]s with `kmax = N / 4`.
pub fn ld4_sweep<T: Scalar>(map: &CoordinateMap<T>, s: f64, fields: usize, seed: u64) -> Result<Vec<Ld4Report>> {
    let grid = map.grid();
    let kmax = (grid.points_per_axis() / 4).max(1) as i64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..fields).map(|_| ld4_check(&random_field(grid, kmax, &mut rng), map, s)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elasticity::gradient_state;
    use crate::solver::DataSpec;
    use std::f64::consts::TAU;

    fn state(grid: &Grid<f64>, amp: f64, seed: u64) -> DeformationState<f64> {
        let data = DataSpec::Periodic { amplitude: amp, velocity: amp, modes: 2 }.generate(grid, seed).unwrap();
        gradient_state(0.0, &data.u, &data.v, None).unwrap()
    }

    fn constant_state(grid: &Grid<f64>, c: [f64; 2]) -> DeformationState<f64> {
        let u = Field::from_fn(grid, Rank::Vector, |_| vec![c[0], c[1]]);
        gradient_state(0.0, &u, &Field::zeros(grid, Rank::Vector), None).unwrap()
    }

    fn bump(grid: &Grid<f64>) -> Field<f64> {
        Field::scalar_fn(grid, |y| (2.0 * (y[0] - 1.0).cos() + (y[1] + 0.5).sin()).exp() - 1.0)
    }

    #[test]
    fn spectral_norm_oracle() {
        let two: [f64; 4] = [3.0, 0.0, 4.0, 5.0];
        // singular values of [[3, 0], [4, 5]] are sqrt(45) and sqrt(5)
        assert!((spectral_norm(&two, 2) - 45f64.sqrt()).abs() < 1e-12);
        let rot: [f64; 9] = [0.6, -0.8, 0.0, 0.8, 0.6, 0.0, 0.0, 0.0, 1.0];
        assert!((spectral_norm(&rot, 3) - 1.0).abs() < 1e-12);
        let m: [f64; 9] = [1.0, 2.0, 0.0, 0.5, -1.0, 3.0, 2.0, 0.0, 1.0];
        // power iteration on M^T M
        let mut x = [1.0, 0.3, -0.2];
        let mut lam = 0.0;
        for _ in 0..500 {
            let mx: Vec<f64> = (0..3).map(|i| (0..3).map(|j| m[i * 3 + j] * x[j]).sum()).collect();
            let y: Vec<f64> = (0..3).map(|j| (0..3).map(|i| m[i * 3 + j] * mx[i]).sum()).collect();
            lam = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            x = [y[0] / lam, y[1] / lam, y[2] / lam];
        }
        assert!((spectral_norm(&m, 3) - lam.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn zero_displacement_is_the_identity() {
        let grid = Grid::<f64>::new(2, 16, TAU).unwrap();
        let map = build_map(&constant_state(&grid, [0.0, 0.0])).unwrap();
        assert_eq!(map.inverse.max_abs(), 0.0);
        let f = bump(&grid);
        assert!(push_forward(&f, &map).unwrap().sub(&f).unwrap().max_abs() < 1e-12);
        assert!(pull_back(&f, &map).unwrap().sub(&f).unwrap().max_abs() < 1e-12);
        assert!((map.jacobian_inf - 1.0).abs() < 1e-15);
    }

    #[test]
    fn constant_displacement_inverts_to_a_shift() {
        let grid = Grid::<f64>::new(2, 16, TAU).unwrap();
        let map = build_map(&constant_state(&grid, [0.3, -0.7])).unwrap();
        for (c, want) in map.inverse.components().iter().zip([-0.3, 0.7]) {
            assert!(c.iter().all(|w| (w - want).abs() < 1e-13));
        }
    }

    #[test]
    fn inverse_composes_to_the_identity() {
        let grid = Grid::<f64>::new(2, 32, TAU).unwrap();
        let map = build_map(&state(&grid, 0.05, 3)).unwrap();
        assert!(map.inverse_defect().unwrap() < 1e-13);
        assert!(map.forward_defect().unwrap() < 1e-8, "{}", map.forward_defect().unwrap());
    }

    #[test]
    fn large_gradients_are_refused() {
        let grid = Grid::<f64>::new(2, 16, TAU).unwrap();
        let u = Field::from_fn(&grid, Rank::Vector, |y| vec![1.5 * y[1].sin(), 0.0]);
        let s = gradient_state(0.0, &u, &Field::zeros(&grid, Rank::Vector), None).unwrap();
        match build_map(&s) {
            Err(Error::MapNotInvertible { grad_inf }) => assert!((grad_inf - 1.5).abs() < 1e-2, "{grad_inf}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn transport_round_trip_and_volume() {
        let grid = Grid::<f64>::new(2, 32, TAU).unwrap();
        let map = build_map(&state(&grid, 0.05, 5)).unwrap();
        let f = bump(&grid);
        let bar = push_forward(&f, &map).unwrap();
        let back = pull_back(&bar, &map).unwrap();
        assert!(back.sub(&f).unwrap().l2_norm() / f.l2_norm() < 1e-6);
        assert!((bar.l2_norm() / f.l2_norm() - 1.0).abs() < 1e-6);
        let mean = |g: &Field<f64>| g.component(0).iter().sum::<f64>();
        assert!((mean(&bar) / mean(&f) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn zero_solution_has_zero_residuals() {
        let grid = Grid::<f64>::new(2, 8, TAU).unwrap();
        let states: Vec<_> = (0..3)
            .map(|k| {
                let mut s = constant_state(&grid, [0.0, 0.0]);
                s.t = 0.1 * k as f64;
                s.p = Some(Field::zeros(&grid, Rank::Scalar));
                s
            })
            .collect();
        let maps: Vec<_> = states.iter().map(|s| build_map(s).unwrap()).collect();
        assert_eq!(euler_residual(&states, &maps).unwrap().max(), [0.0; 4]);
        assert!(euler_residual(&states[..2], &maps[..2]).is_err());
    }

    #[test]
    fn divergences_of_a_valid_state_vanish() {
        let grid = Grid::<f64>::new(2, 32, TAU).unwrap();
        let (s0, _) = state(&grid, 0.05, 7).with_pressure(1e-11).unwrap();
        let states: Vec<_> = (0..3).map(|k| DeformationState { t: k as f64, ..s0.clone() }).collect();
        let maps: Vec<_> = states.iter().map(|s| build_map(s).unwrap()).collect();
        let rep = euler_residual(&states, &maps).unwrap();
        let [_, _, div_v, div_f] = rep.max();
        assert!(div_v < 1e-8 && div_f < 1e-8, "{div_v} {div_f}");
    }

    #[test]
    fn frame_equivalence_ratios() {
        let grid = Grid::<f64>::new(2, 16, TAU).unwrap();
        let f = bump(&grid);
        let id = build_map(&constant_state(&grid, [0.0, 0.0])).unwrap();
        let r = ld4_check(&f, &id, 0.5).unwrap();
        assert!((r.ratio_forward - 1.0).abs() < 1e-12 && (r.ratio_backward - 1.0).abs() < 1e-12);
        let h = grid.spacing();
        let shift = build_map(&constant_state(&grid, [3.0 * h, -h])).unwrap();
        let r = ld4_check(&f, &shift, 0.3).unwrap();
        assert!((r.ratio_forward - 1.0).abs() < 1e-10 && (r.ratio_backward - 1.0).abs() < 1e-10, "{r:?}");
        assert!(ld4_check(&f, &id, 1.0).is_err());
        let map = build_map(&state(&grid, 0.05, 2)).unwrap();
        assert!(ld4_check(&f, &map, 0.5).unwrap().within);
    }
}
