//! Smooth cutoffs and the inverse wave operator off the light cone.

use num_complex::Complex;

use super::spacetime::{Sampling, SpaceTimeField};
use crate::error::{Error, Result};
use crate::scalar::{fabs, Scalar};

/// `exp(-1/x)` for `x > 0`, else 0.
fn flat<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        (-x.recip()).exp()
    } else {
        T::zero()
    }
}

/// C-infinity step: 0 for `x <= 0`, 1 for `x >= 1`, strictly monotone between.
pub fn smooth_step<T: Scalar>(x: T) -> T {
    if x <= T::zero() {
        return T::zero();
    }
    if x >= T::one() {
        return T::one();
    }
    let a = flat(x);
    let b = flat(T::one() - x);
    a / (a + b)
}

/// Derivative of [`smooth_step`].
pub fn smooth_step_derivative<T: Scalar>(x: T) -> T {
    if x <= T::zero() || x >= T::one() {
        return T::zero();
    }
    let a = flat(x);
    let b = flat(T::one() - x);
    let d = a + b;
    let y = T::one() - x;
    a * b * ((x * x).recip() + (y * y).recip()) / (d * d)
}

/// Time cutoff: 1 on `[-1, 1]`, supported in `[-1.9, 1.9]`.
pub fn cutoff_chi<T: Scalar>(t: T) -> T {
    smooth_step((T::lit(1.9) - fabs(t)) / T::lit(0.9))
}

/// Derivative of [`cutoff_chi`].
pub fn cutoff_chi_derivative<T: Scalar>(t: T) -> T {
    let d = smooth_step_derivative((T::lit(1.9) - fabs(t)) / T::lit(0.9)) / T::lit(0.9);
    if t > T::zero() {
        -d
    } else {
        d
    }
}

/// Frequency cutoff: 1 on `[-2, 2]`, supported in `[-3.8, 3.8]`.
pub fn cutoff_phi<T: Scalar>(x: T) -> T {
    smooth_step((T::lit(3.8) - fabs(x)) / T::lit(1.8))
}

/// Window taper at relative position `s in [0, 1)`: ramps up over the first
/// quarter, 1 on the central half, ramps down over the last quarter.
pub fn taper<T: Scalar>(s: T) -> T {
    let q = T::lit(0.25);
    if s < q {
        smooth_step(s / q)
    } else if s > T::one() - q {
        smooth_step((T::one() - s) / q)
    } else {
        T::one()
    }
}

/// Distance to the light cone below which `1 / (tau^2 - |xi|^2)` is refused,
/// for a box of side `period`.
pub fn cone_guard<T: Scalar>(period: T) -> T {
    T::lit(1e-6) * T::two_pi() / period
}

/// Weight `phi(sqrt(T) <||tau| - |xi||>)` of the near-cone part.
pub fn near_cone_weight<T: Scalar>(tau: T, xi: T, t_scale: T) -> T {
    cutoff_phi(t_scale.sqrt() * (T::one() + fabs(fabs(tau) - xi)))
}

/// Splits `f` into its near-cone part `phi(sqrt(T) Lambda_-) f` and the
/// remainder.
pub fn cone_split<T: Scalar>(f: &SpaceTimeField<T>, t_scale: T) -> Result<(SpaceTimeField<T>, SpaceTimeField<T>)> {
    let spectra = f.space_time_spectra()?;
    let grid = f.grid();
    let window = *f.window();
    let len = grid.len();
    let mut near = spectra.clone();
    let mut far = spectra;
    for (nb, fb) in near.iter_mut().zip(far.iter_mut()) {
        for k in 0..window.samples {
            let tau = window.tau(k);
            for idx in 0..len {
                let w = near_cone_weight(tau, grid.xi_norm(idx), t_scale);
                let j = k * len + idx;
                nb[j] *= w;
                fb[j] *= T::one() - w;
            }
        }
    }
    let mk = |s| SpaceTimeField::from_space_time_spectra(grid, window, f.rank(), f.sampling(), s);
    Ok((mk(near)?, mk(far)?))
}

/// Divides space-time coefficients by `tau^2 - |xi|^2`.
///
/// Coefficients within the cone guard are zeroed if their magnitude is below
/// the rounding floor and rejected otherwise.
pub fn divide_by_box<T: Scalar>(f: &SpaceTimeField<T>) -> Result<SpaceTimeField<T>> {
    let mut spectra = f.space_time_spectra()?;
    let grid = f.grid();
    let window = *f.window();
    divide_by_box_spectra(grid, &window, &mut spectra)?;
    SpaceTimeField::from_space_time_spectra(grid, window, f.rank(), f.sampling(), spectra)
}

pub(crate) fn divide_by_box_spectra<T: Scalar>(
    grid: &super::Grid<T>,
    window: &super::TimeWindow<T>,
    spectra: &mut [Vec<Complex<T>>],
) -> Result<()> {
    let len = grid.len();
    let guard = cone_guard(grid.period());
    let peak = spectra
        .iter()
        .flat_map(|s| s.iter())
        .fold(T::zero(), |m, c| m.max(c.norm()));
    let floor = peak * T::epsilon() * T::lit(1e4);
    for buf in spectra.iter_mut() {
        for k in 0..window.samples {
            let tau = window.tau(k);
            for idx in 0..len {
                let xi = grid.xi_norm(idx);
                let c = &mut buf[k * len + idx];
                if fabs(fabs(tau) - xi) < guard {
                    if c.norm() > floor {
                        return Err(Error::ConeProximity { tau: tau.as_f64(), xi: xi.as_f64() });
                    }
                    *c = Complex::new(T::zero(), T::zero());
                } else {
                    *c = *c / (tau * tau - xi * xi);
                }
            }
        }
    }
    Ok(())
}

/// `box^{-1} (1 - phi(sqrt(T) Lambda_-)) f` with `box = -d_t^2 + Delta`.
pub fn box_inverse<T: Scalar>(f: &SpaceTimeField<T>, t_scale: T) -> Result<SpaceTimeField<T>> {
    if !(t_scale > T::zero()) {
        return Err(Error::Parameter(format!("time scale {t_scale} must be positive")));
    }
    let (_, far) = cone_split(f, t_scale)?;
    divide_by_box(&far)
}

/// Applies `box = -d_t^2 + Delta` spectrally on the window.
pub fn apply_box<T: Scalar>(f: &SpaceTimeField<T>) -> Result<SpaceTimeField<T>> {
    let mut spectra = f.space_time_spectra()?;
    let grid = f.grid();
    let window = *f.window();
    let len = grid.len();
    for buf in spectra.iter_mut() {
        for k in 0..window.samples {
            let tau = window.tau(k);
            for idx in 0..len {
                let xi = grid.xi_norm(idx);
                buf[k * len + idx] *= tau * tau - xi * xi;
            }
        }
    }
    let sampling = if f.sampling() == Sampling::Raw { Sampling::Tapered } else { f.sampling() };
    SpaceTimeField::from_space_time_spectra(grid, window, f.rank(), sampling, spectra)
}
