//! Sobolev, space-time, mixed and Gagliardo norms.
//!
//! Spatial norms are exact lattice sums. Space-time norms use the discrete
//! Fourier transform of the window, so they approximate the whole-line
//! norms up to taper leakage.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{fabs, Scalar};
use crate::spectral::{bracket, Field, Grid, SpaceTimeField};

/// Kind of norm together with its exponents.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NormSpec {
    Sobolev { s: f64 },
    Hst { s: f64, theta: f64 },
    BarHst { s: f64, theta: f64 },
    Mixed { q: TimeExponent, space: SpaceNorm },
    Gagliardo { s: f64 },
}

/// Time exponent of a mixed norm.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeExponent {
    One,
    Two,
    Four,
    Infinity,
}

impl TimeExponent {
    pub fn from_value(q: f64) -> Result<Self> {
        match q {
            q if q == 1.0 => Ok(Self::One),
            q if q == 2.0 => Ok(Self::Two),
            q if q == 4.0 => Ok(Self::Four),
            q if q.is_infinite() && q > 0.0 => Ok(Self::Infinity),
            _ => Err(Error::Parameter(format!("time exponent {q} not in {{1, 2, 4, inf}}"))),
        }
    }

    fn power(self) -> Option<i32> {
        match self {
            Self::One => Some(1),
            Self::Two => Some(2),
            Self::Four => Some(4),
            Self::Infinity => None,
        }
    }
}

/// Spatial part of a mixed norm.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "norm", rename_all = "lowercase")]
pub enum SpaceNorm {
    L2,
    Linf,
    Sobolev { s: f64 },
}

impl NormSpec {
    /// Evaluates a spatial norm kind on a field.
    pub fn eval_field<T: Scalar>(&self, f: &Field<T>) -> Result<T> {
        match *self {
            NormSpec::Sobolev { s } => Ok(sobolev_norm(f, T::lit(s))),
            NormSpec::Gagliardo { s } => gagliardo_seminorm(f, T::lit(s)),
            _ => Err(Error::Parameter(format!("{self:?} needs a space-time field"))),
        }
    }

    pub fn eval_history<T: Scalar>(&self, f: &SpaceTimeField<T>) -> Result<T> {
        match *self {
            NormSpec::Hst { s, theta } => hst_norm(f, T::lit(s), T::lit(theta)),
            NormSpec::BarHst { s, theta } => bar_norm(f, T::lit(s), T::lit(theta)),
            NormSpec::Mixed { q, space } => mixed_norm(f, q, space),
            _ => Err(Error::Parameter(format!("{self:?} needs a spatial field"))),
        }
    }
}

/// `sum_xi w(|xi|) |f_hat|^2` times the physical normalization, over all components.
pub(crate) fn weighted_spectral_sum<T: Scalar>(grid: &Grid<T>, spectra: &[Vec<Complex<T>>], w: impl Fn(T) -> T) -> T {
    let n2 = T::usz(grid.len()) * T::usz(grid.len());
    let norm = grid.volume() / n2;
    let mut acc = T::zero();
    for spec in spectra {
        for (c, &r) in spec.iter().zip(grid.xi_norms()) {
            acc += w(r) * c.norm_sqr();
        }
    }
    acc * norm
}

/// `||<xi>^s f_hat||_{L^2}` with the physical normalization of the box.
pub fn sobolev_norm<T: Scalar>(f: &Field<T>, s: T) -> T {
    let two_s = s + s;
    weighted_spectral_sum(f.grid(), f.spectra(), |r| bracket(r).powf(two_s)).sqrt()
}

/// Homogeneous seminorm `|| |xi|^s f_hat ||_{L^2}`, zero mode dropped.
pub fn homogeneous_norm<T: Scalar>(f: &Field<T>, s: T) -> T {
    let two_s = s + s;
    weighted_spectral_sum(f.grid(), f.spectra(), |r| if r == T::zero() { T::zero() } else { r.powf(two_s) })
        .sqrt()
}

fn space_time_weighted<T: Scalar>(f: &SpaceTimeField<T>, weight: impl Fn(T, T) -> T) -> Result<T> {
    let spectra = f.space_time_spectra()?;
    Ok(space_time_weighted_spectra(f.grid(), f.window(), &spectra, weight))
}

pub(crate) fn space_time_weighted_spectra<T: Scalar>(
    grid: &Grid<T>,
    window: &crate::spectral::TimeWindow<T>,
    spectra: &[Vec<Complex<T>>],
    weight: impl Fn(T, T) -> T,
) -> T {
    let len = grid.len();
    let m = window.samples;
    let mut acc = T::zero();
    for k in 0..m {
        let tau = window.tau(k);
        for idx in 0..len {
            let w = weight(tau, grid.xi_norm(idx));
            if w == T::zero() {
                continue;
            }
            for spec in spectra {
                acc += w * spec[k * len + idx].norm_sqr();
            }
        }
    }
    let nn = T::usz(len) * T::usz(len) * T::usz(m) * T::usz(m);
    acc * window.length * grid.volume() / nn
}

/// Squared space-time weight `<xi>^{2s} <||tau| - |xi||>^{2 theta}`.
pub(crate) fn hst_weight<T: Scalar>(s: T, theta: T) -> impl Fn(T, T) -> T {
    let (a, b) = (s + s, theta + theta);
    move |tau, xi| bracket(xi).powf(a) * bracket(fabs(tau) - xi).powf(b)
}

/// Windowed `||<xi>^s <||tau|-|xi||>^theta F~||_{L^2}`.
pub fn hst_norm<T: Scalar>(f: &SpaceTimeField<T>, s: T, theta: T) -> Result<T> {
    Ok(space_time_weighted(f, hst_weight(s, theta))?.sqrt())
}

/// `||F||_{s,theta} + ||d_t F||_{s-1,theta}` with the time derivative taken spectrally.
pub fn bar_norm<T: Scalar>(f: &SpaceTimeField<T>, s: T, theta: T) -> Result<T> {
    let spectra = f.space_time_spectra()?;
    let grid = f.grid();
    let window = f.window();
    let base = space_time_weighted_spectra(grid, window, &spectra, hst_weight(s, theta)).sqrt();
    let w1 = hst_weight(s - T::one(), theta);
    let m = window.samples;
    let dt_part = space_time_weighted_spectra(grid, window, &spectra, |tau, xi| {
        // Nyquist bin carries no derivative
        if fabs(tau) * window.length / T::two_pi() >= T::usz(m / 2) {
            T::zero()
        } else {
            tau * tau * w1(tau, xi)
        }
    })
    .sqrt();
    Ok(base + dt_part)
}

/// `||F||_{s,theta} + ||F_t||_{s-1,theta}` with an explicitly supplied time derivative.
pub fn bar_norm_with_derivative<T: Scalar>(f: &SpaceTimeField<T>, ft: &SpaceTimeField<T>, s: T, theta: T) -> Result<T> {
    f.check_compatible(ft)?;
    Ok(hst_norm(f, s, theta)? + hst_norm(ft, s - T::one(), theta)?)
}

/// Quadrature of `|g(t)|^q` over the sampled times: trapezoid for finite `q`, maximum for `q = inf`.
pub fn time_norm<T: Scalar>(times: &[T], values: &[T], q: TimeExponent) -> Result<T> {
    if times.len() != values.len() {
        return Err(Error::Mismatch(format!("{} times for {} values", times.len(), values.len())));
    }
    match q.power() {
        None => Ok(values.iter().fold(T::zero(), |m, &v| m.max(fabs(v)))),
        Some(p) => {
            if times.len() < 2 {
                return Ok(T::zero());
            }
            let half = T::lit(0.5);
            let mut acc = T::zero();
            for w in 0..times.len() - 1 {
                let dt = times[w + 1] - times[w];
                acc += half * dt * (fabs(values[w]).powi(p) + fabs(values[w + 1]).powi(p));
            }
            Ok(acc.powf(T::one() / T::lit(p as f64)))
        }
    }
}

/// Mixed norm `L^q_t X` over the window samples.
pub fn mixed_norm<T: Scalar>(f: &SpaceTimeField<T>, q: TimeExponent, space: SpaceNorm) -> Result<T> {
    let window = f.window();
    let values: Vec<T> = (0..window.samples)
        .map(|k| {
            let s = f.slice(k);
            match space {
                SpaceNorm::L2 => s.l2_norm(),
                SpaceNorm::Linf => s.max_abs(),
                SpaceNorm::Sobolev { s: e } => sobolev_norm(&s, T::lit(e)),
            }
        })
        .collect();
    time_norm(&window.times(), &values, q)
}

/// Largest number of `(y, h)` pairs summed by [`gagliardo_seminorm`] before
/// offsets are subsampled.
pub const GAGLIARDO_PAIR_BUDGET: usize = 1_000_000;

const GAGLIARDO_BINS: usize = 16;

/// Lattice offsets with `0 < |h| <= L/4` (periodic) and their quadrature weights.
pub(crate) fn gagliardo_offsets<T: Scalar>(grid: &Grid<T>) -> Vec<(Vec<i64>, T, T)> {
    let n = grid.points_per_axis() as i64;
    let dim = grid.dim();
    let hcell = grid.spacing();
    let rmax = grid.period() / T::lit(4.0);
    let reach = n / 4;
    let side = (2 * reach + 1) as usize;
    let mut all: Vec<(Vec<i64>, T)> = Vec::new();
    for flat in 0..side.pow(dim as u32) {
        let off: Vec<i64> = (0..dim)
            .map(|a| ((flat / side.pow((dim - 1 - a) as u32)) % side) as i64 - reach)
            .collect();
        let r2 = off.iter().fold(T::zero(), |s, &k| {
            let x = hcell * T::lit(k as f64);
            s + x * x
        });
        let r = r2.sqrt();
        if r > T::zero() && r <= rmax * (T::one() + T::epsilon() * T::lit(16.0)) {
            all.push((off, r));
        }
    }
    let vol = grid.cell_volume();
    let budget = (GAGLIARDO_PAIR_BUDGET / grid.len()).max(GAGLIARDO_BINS);
    if all.len() <= budget {
        return all.into_iter().map(|(o, r)| (o, r, vol)).collect();
    }
    // stratify by |h| and keep evenly spaced representatives in each bin
    all.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("finite radii").then_with(|| a.0.cmp(&b.0)));
    let mut bins: Vec<Vec<(Vec<i64>, T)>> = vec![Vec::new(); GAGLIARDO_BINS];
    for (o, r) in all.iter().cloned() {
        let b = ((r / rmax).as_f64() * GAGLIARDO_BINS as f64) as usize;
        bins[b.min(GAGLIARDO_BINS - 1)].push((o, r));
    }
    let total = all.len();
    let mut out = Vec::with_capacity(budget);
    for bin in bins.into_iter().filter(|b| !b.is_empty()) {
        let take = ((bin.len() * budget) / total).clamp(1, bin.len());
        let w = vol * T::usz(bin.len()) / T::usz(take);
        for j in 0..take {
            let (o, r) = bin[(j * bin.len()) / take].clone();
            out.push((o, r, w));
        }
    }
    out
}

/// Gagliardo seminorm `(int int |f(y+h) - f(y)|^2 / |h|^{n+2s} dh dy)^{1/2}`,
/// truncated to `|h| <= L/4` with periodic offsets.
pub fn gagliardo_seminorm<T: Scalar>(f: &Field<T>, s: T) -> Result<T> {
    if !(s > T::zero() && s < T::one()) {
        return Err(Error::Parameter(format!("Gagliardo exponent {s} must lie in (0, 1)")));
    }
    let grid = f.grid();
    let n = grid.points_per_axis();
    let dim = grid.dim();
    let expo = T::usz(dim) + s + s;
    let vol = grid.cell_volume();
    let offsets = gagliardo_offsets(grid);
    let mut acc = T::zero();
    for comp in f.components() {
        for (off, r, wh) in &offsets {
            let kernel = *wh / r.powf(expo);
            let mut inner = T::zero();
            for idx in 0..grid.len() {
                let mut j = 0usize;
                for (a, &o) in off.iter().enumerate() {
                    let ja = (grid.axis_index(idx, a) as i64 + o).rem_euclid(n as i64) as usize;
                    j = j * n + ja;
                }
                let d = comp[j] - comp[idx];
                inner += d * d;
            }
            acc += kernel * inner;
        }
    }
    Ok((acc * vol).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{Rank, Sampling, TimeWindow};

    #[test]
    fn constant_field_norm() {
        let l = 3.0;
        let g = Grid::<f64>::new(2, 8, l).unwrap();
        let f = Field::scalar_fn(&g, |_| -2.0);
        for s in [0.0, 1.0, 2.5] {
            assert!((sobolev_norm(&f, s) - 2.0 * l).abs() < 1e-12);
        }
        assert!(gagliardo_seminorm(&f, 0.5).unwrap().abs() < 1e-14);
        assert!(gagliardo_seminorm(&f, 1.0).is_err());
        assert!(gagliardo_seminorm(&f, 0.0).is_err());
    }

    #[test]
    fn zero_history_norms() {
        let g = Grid::<f64>::new(2, 8, 1.0).unwrap();
        let w = TimeWindow::new(0.0, 1.0, 8).unwrap();
        let f = SpaceTimeField::zeros(&g, w, Rank::Scalar).with_sampling(Sampling::Tapered);
        assert_eq!(hst_norm(&f, 1.0, 0.6).unwrap(), 0.0);
        assert_eq!(bar_norm(&f, 1.0, 0.6).unwrap(), 0.0);
        assert!(hst_norm(&f.clone().with_sampling(Sampling::Raw), 1.0, 0.6).is_err());
    }

    #[test]
    fn time_constant_infinity_norm() {
        let g = Grid::<f64>::new(2, 8, 1.0).unwrap();
        let w = TimeWindow::new(0.0, 1.0, 8).unwrap();
        let f = SpaceTimeField::from_fn(&g, w, Rank::Scalar, Sampling::Raw, |_, y| vec![y[0] - 0.3]);
        let m = mixed_norm(&f, TimeExponent::Infinity, SpaceNorm::L2).unwrap();
        assert!((m - f.slice(0).l2_norm()).abs() < 1e-15);
        let m2 = mixed_norm(&f, TimeExponent::Two, SpaceNorm::Linf).unwrap();
        let span = w.time(7) - w.time(0);
        assert!((m2 - 0.575 * span.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn offsets_respect_budget() {
        let g = Grid::<f64>::new(2, 128, 1.0).unwrap();
        let offs = gagliardo_offsets(&g);
        assert!(offs.len() * g.len() <= GAGLIARDO_PAIR_BUDGET + GAGLIARDO_BINS * g.len());
        let total_weight: f64 = offs.iter().map(|o| o.2).sum();
        let full = gagliardo_offsets(&Grid::<f64>::new(2, 16, 1.0).unwrap()).len();
        assert!(full > 0);
        // weights reproduce the area of the punctured disc of radius L/4 up to lattice error
        let area = std::f64::consts::PI / 16.0;
        assert!((total_weight - area).abs() / area < 0.02, "{total_weight}");
    }
}
