use num_complex::Complex;

use super::field::Field;
use super::grid::Grid;
use super::spacetime::{Sampling, SpaceTimeField, TimeWindow};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `(cos(t r), sin(t r) / r, -r sin(t r))` with the `r -> 0` limits.
#[inline]
pub(crate) fn wave_coefficients<T: Scalar>(r: T, t: T) -> (T, T, T) {
    if r == T::zero() {
        (T::one(), t, T::zero())
    } else {
        let (s, c) = (r * t).sin_cos();
        (c, s / r, -r * s)
    }
}

/// Free-wave evolution of the spectra `(f, g)` of `(u, d_t u)` at time zero.
pub(crate) fn propagate_spectra<T: Scalar>(
    grid: &Grid<T>,
    f: &[Complex<T>],
    g: &[Complex<T>],
    t: T,
) -> (Vec<Complex<T>>, Vec<Complex<T>>) {
    let mut u = Vec::with_capacity(f.len());
    let mut ut = Vec::with_capacity(f.len());
    for (idx, (&a, &b)) in f.iter().zip(g).enumerate() {
        let (c, sr, rs) = wave_coefficients(grid.xi_norm(idx), t);
        u.push(a * c + b * sr);
        ut.push(a * rs + b * c);
    }
    (u, ut)
}

/// Returns `(u(t), d_t u(t))` for the free wave with `u(0) = f`, `d_t u(0) = g`.
pub fn wave_propagator<T: Scalar>(f: &Field<T>, g: &Field<T>, t: T) -> Result<(Field<T>, Field<T>)> {
    f.grid().check_same(g.grid())?;
    if f.rank() != g.rank() {
        return Err(Error::Rank { expected: f.rank().to_string(), found: g.rank().to_string() });
    }
    let grid = f.grid();
    let mut us = Vec::with_capacity(f.num_components());
    let mut uts = Vec::with_capacity(f.num_components());
    for (a, b) in f.spectra().iter().zip(g.spectra()) {
        let (u, ut) = propagate_spectra(grid, a, b, t);
        us.push(u);
        uts.push(ut);
    }
    Ok((Field::from_spectra(grid, f.rank(), us)?, Field::from_spectra(grid, f.rank(), uts)?))
}

/// Sampled free wave and its time derivative on a window. The histories are
/// `Raw`; taper or cut them off before time transforms.
pub fn free_wave_history<T: Scalar>(
    f: &Field<T>,
    g: &Field<T>,
    window: TimeWindow<T>,
) -> Result<(SpaceTimeField<T>, SpaceTimeField<T>)> {
    let mut u = Vec::with_capacity(window.samples);
    let mut ut = Vec::with_capacity(window.samples);
    for k in 0..window.samples {
        let (a, b) = wave_propagator(f, g, window.time(k))?;
        u.push(a);
        ut.push(b);
    }
    Ok((
        SpaceTimeField::from_slices(window, Sampling::Raw, &u)?,
        SpaceTimeField::from_slices(window, Sampling::Raw, &ut)?,
    ))
}

/// Discrete wave energy `int |d_t u|^2 + |grad u|^2`.
pub fn wave_energy<T: Scalar>(u: &Field<T>, ut: &Field<T>) -> Result<T> {
    let grad = u.gradient()?;
    let g2 = grad.l2_norm();
    let v2 = ut.l2_norm();
    Ok(g2 * g2 + v2 * v2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Rank;

    #[test]
    fn zero_mode_grows_linearly() {
        let g = Grid::<f64>::new(2, 8, 1.0).unwrap();
        let zero = Field::zeros(&g, Rank::Scalar);
        let c = Field::scalar_fn(&g, |_| 0.7);
        let (u, ut) = wave_propagator(&zero, &c, 3.0).unwrap();
        assert!(u.component(0).iter().all(|&x| (x - 2.1).abs() < 1e-14));
        assert!(ut.component(0).iter().all(|&x| (x - 0.7).abs() < 1e-14));
    }

    #[test]
    fn identity_at_time_zero() {
        let g = Grid::<f64>::new(2, 8, 1.0).unwrap();
        let f = Field::scalar_fn(&g, |y| (6.0 * y[0]).sin() + y[1].cos());
        let zero = Field::zeros(&g, Rank::Scalar);
        let (u, ut) = wave_propagator(&f, &zero, 0.0).unwrap();
        assert!(u.sub(&f).unwrap().max_abs() < 1e-12);
        assert!(ut.max_abs() < 1e-12);
    }
}
