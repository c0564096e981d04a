use num_complex::Complex;

use super::field::Field;
use super::spacetime::SpaceTimeField;
use crate::error::{Error, Result};
use crate::scalar::{fabs, Scalar};

/// Japanese bracket `1 + |x|`.
#[inline]
pub fn bracket<T: Scalar>(x: T) -> T {
    T::one() + fabs(x)
}

/// Rule for the zero mode when a negative power of `D` is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZeroMode {
    /// error out if the field has a nonzero mean
    Reject,
    /// drop the mean first
    Project,
}

/// Which cone distance `Lambda_+` or `Lambda_-` measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConeSign {
    Plus,
    Minus,
}

/// Multiplies the spectrum of each component by `symbol(xi)`.
pub fn apply_multiplier<T, S>(f: &Field<T>, symbol: S) -> Result<Field<T>>
where
    T: Scalar,
    S: Fn(&[T]) -> Complex<T>,
{
    let grid = f.grid();
    let dim = grid.dim();
    let values = symbol_table(grid, |idx| {
        let xi = grid.xi_vec(idx);
        symbol(&xi[..dim])
    })?;
    let spectra = f
        .spectra()
        .iter()
        .map(|s| s.iter().zip(&values).map(|(c, m)| c * m).collect())
        .collect();
    Field::from_spectra(grid, f.rank(), spectra)
}

fn symbol_table<T: Scalar>(grid: &super::Grid<T>, mut eval: impl FnMut(usize) -> Complex<T>) -> Result<Vec<Complex<T>>> {
    (0..grid.len())
        .map(|idx| {
            let v = eval(idx);
            if v.re.is_finite() && v.im.is_finite() {
                Ok(v)
            } else {
                let xi = grid.xi_vec(idx);
                Err(Error::NonFiniteSymbol { frequency: xi[..grid.dim()].iter().map(|x| x.as_f64()).collect() })
            }
        })
        .collect()
}

/// Space-time version of [`apply_multiplier`]; `symbol` receives `(tau, xi)`.
pub fn apply_spacetime_multiplier<T, S>(f: &SpaceTimeField<T>, symbol: S) -> Result<SpaceTimeField<T>>
where
    T: Scalar,
    S: Fn(T, &[T]) -> Complex<T>,
{
    let grid = f.grid();
    let window = *f.window();
    let dim = grid.dim();
    let len = grid.len();
    let mut spectra = f.space_time_spectra()?;
    for k in 0..window.samples {
        let tau = window.tau(k);
        for idx in 0..len {
            let xi = grid.xi_vec(idx);
            let m = symbol(tau, &xi[..dim]);
            if !(m.re.is_finite() && m.im.is_finite()) {
                let mut frequency = vec![tau.as_f64()];
                frequency.extend(xi[..dim].iter().map(|x| x.as_f64()));
                return Err(Error::NonFiniteSymbol { frequency });
            }
            for s in spectra.iter_mut() {
                s[k * len + idx] *= m;
            }
        }
    }
    SpaceTimeField::from_space_time_spectra(grid, window, f.rank(), f.sampling(), spectra)
}

/// `Lambda^alpha`, symbol `<xi>^alpha`.
pub fn lambda_op<T: Scalar>(f: &Field<T>, alpha: T) -> Result<Field<T>> {
    radial(f, |r| bracket(r).powf(alpha))
}

fn radial<T: Scalar>(f: &Field<T>, m: impl Fn(T) -> T) -> Result<Field<T>> {
    let grid = f.grid();
    let values = symbol_table(grid, |idx| Complex::new(m(grid.xi_norm(idx)), T::zero()))?;
    let spectra = f
        .spectra()
        .iter()
        .map(|s| s.iter().zip(&values).map(|(c, v)| c * v).collect())
        .collect();
    Field::from_spectra(grid, f.rank(), spectra)
}

/// `D^alpha`, symbol `|xi|^alpha`.
///
/// For `alpha < 0` the zero mode follows `zero_mode`.
pub fn d_op<T: Scalar>(f: &Field<T>, alpha: T, zero_mode: ZeroMode) -> Result<Field<T>> {
    if alpha == T::zero() {
        return Ok(f.clone());
    }
    if alpha < T::zero() && zero_mode == ZeroMode::Reject {
        let scale = f.max_abs().max(T::min_positive_value());
        for m in f.means() {
            if fabs(m) > scale * T::epsilon() * T::lit(64.0) {
                return Err(Error::NonzeroMean { mean: m.as_f64() });
            }
        }
    }
    radial(f, |r| if r == T::zero() { T::zero() } else { r.powf(alpha) })
}

/// `Lambda_+^alpha` or `Lambda_-^alpha`, symbol `<|tau| +- |xi|>^alpha`.
pub fn lambda_pm<T: Scalar>(f: &SpaceTimeField<T>, alpha: T, sign: ConeSign) -> Result<SpaceTimeField<T>> {
    apply_spacetime_multiplier(f, |tau, xi| {
        let r = xi.iter().fold(T::zero(), |s, &x| s + x * x).sqrt();
        let d = match sign {
            ConeSign::Plus => fabs(tau) + r,
            ConeSign::Minus => fabs(tau) - r,
        };
        Complex::new(bracket(d).powf(alpha), T::zero())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{Grid, Rank};
    use std::f64::consts::PI;

    #[test]
    fn lambda_of_constant() {
        let g = Grid::<f64>::new(2, 8, 1.0).unwrap();
        let one = Field::scalar_fn(&g, |_| 1.0);
        let out = lambda_op(&one, 2.0).unwrap();
        assert!(out.component(0).iter().all(|&x| (x - 1.0).abs() < 1e-14));
    }

    #[test]
    fn d_squared_eigenfunction() {
        let l = 3.0;
        let g = Grid::<f64>::new(2, 16, l).unwrap();
        let k = 2.0 * PI / l;
        let f = Field::scalar_fn(&g, |y| (k * y[0]).sin());
        let out = d_op(&f, 2.0, ZeroMode::Reject).unwrap();
        for (a, b) in out.component(0).iter().zip(f.component(0)) {
            assert!((a - k * k * b).abs() < 1e-12);
        }
    }

    #[test]
    fn negative_power_needs_zero_mean() {
        let g = Grid::<f64>::new(2, 8, 1.0).unwrap();
        let f = Field::scalar_fn(&g, |y| 1.0 + (2.0 * PI * y[1]).cos());
        assert!(matches!(d_op(&f, -1.0, ZeroMode::Reject), Err(Error::NonzeroMean { .. })));
        let p = d_op(&f, -1.0, ZeroMode::Project).unwrap();
        assert!(p.means()[0].abs() < 1e-14);
    }

    #[test]
    fn non_finite_symbol_names_frequency() {
        let g = Grid::<f64>::new(2, 8, 2.0 * PI).unwrap();
        let f = Field::zeros(&g, Rank::Scalar);
        let err = apply_multiplier(&f, |xi| Complex::new(1.0 / xi[0], 0.0)).unwrap_err();
        match err {
            Error::NonFiniteSymbol { frequency } => assert_eq!(frequency[0], 0.0),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn derivative_symbol() {
        let l = 2.0;
        let g = Grid::<f64>::new(2, 8, l).unwrap();
        let k = 2.0 * PI / l;
        let f = Field::scalar_fn(&g, |y| (k * y[0]).sin());
        let out = apply_multiplier(&f, |xi| Complex::new(0.0, xi[0])).unwrap();
        for idx in 0..g.len() {
            let y = g.point(idx);
            assert!((out.component(0)[idx] - k * (k * y[0]).cos()).abs() < 1e-12);
        }
    }
}
