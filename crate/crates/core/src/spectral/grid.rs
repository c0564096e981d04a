use std::fmt;
use std::sync::Arc;

use num_complex::Complex;

use super::fft::FftNd;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Periodic sampling lattice on the box `[0, L)^dim` with its wavenumbers.
///
/// Cloning is cheap; FFT plans and lookup tables are shared.
#[derive(Clone)]
pub struct Grid<T: Scalar> {
    inner: Arc<GridInner<T>>,
}

struct GridInner<T: Scalar> {
    dim: usize,
    n: usize,
    period: T,
    len: usize,
    fft: FftNd<T>,
    fine: FftNd<T>,
    fine_n: usize,
    /// index of each coarse mode in the 3/2-padded lattice, `None` for Nyquist modes
    pad_map: Vec<Option<usize>>,
    /// signed integer wavenumber per axis index
    kint: Vec<i64>,
    xi_norm: Vec<T>,
}

impl<T: Scalar> fmt::Debug for Grid<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.inner.dim)
            .field("n", &self.inner.n)
            .field("period", &self.inner.period)
            .finish()
    }
}

impl<T: Scalar> PartialEq for Grid<T> {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.dim == other.inner.dim
                && self.inner.n == other.inner.n
                && self.inner.period == other.inner.period)
    }
}

impl<T: Scalar> Grid<T> {
    /// `dim` must be 2 or 3 and `n` a power of two no smaller than 4.
    pub fn new(dim: usize, n: usize, period: T) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in {{2, 3}}")));
        }
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis {n} must be a power of two >= 4"
            )));
        }
        if !(period > T::zero()) || !period.is_finite() {
            return Err(Error::InvalidGrid(format!("period {period} must be positive")));
        }
        let len = n.pow(dim as u32);
        let fine_n = 3 * n / 2;
        let kint: Vec<i64> = (0..n)
            .map(|j| if j < n / 2 { j as i64 } else { j as i64 - n as i64 })
            .collect();
        let unit = T::two_pi() / period;
        let mut pad_map = Vec::with_capacity(len);
        let mut xi_norm = Vec::with_capacity(len);
        for idx in 0..len {
            let mut nyq = false;
            let mut fine_idx = 0usize;
            let mut k2 = T::zero();
            for a in 0..dim {
                let j = axis_index(idx, a, dim, n);
                let k = kint[j];
                if j == n / 2 {
                    nyq = true;
                }
                let kf = if k < 0 { (k + fine_n as i64) as usize } else { k as usize };
                fine_idx = fine_idx * fine_n + kf;
                let xi = unit * T::lit(k as f64);
                k2 += xi * xi;
            }
            pad_map.push(if nyq { None } else { Some(fine_idx) });
            xi_norm.push(k2.sqrt());
        }
        Ok(Self {
            inner: Arc::new(GridInner {
                dim,
                n,
                period,
                len,
                fft: FftNd::new(dim, n),
                fine: FftNd::new(dim, fine_n),
                fine_n,
                pad_map,
                kint,
                xi_norm,
            }),
        })
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.inner.n
    }

    pub fn period(&self) -> T {
        self.inner.period
    }

    /// Total number of lattice points.
    pub fn len(&self) -> usize {
        self.inner.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> T {
        self.inner.period / T::usz(self.inner.n)
    }

    pub fn cell_volume(&self) -> T {
        self.spacing().powi(self.inner.dim as i32)
    }

    pub fn volume(&self) -> T {
        self.inner.period.powi(self.inner.dim as i32)
    }

    /// Fundamental wavenumber `2 pi / L`.
    pub fn unit_wavenumber(&self) -> T {
        T::two_pi() / self.inner.period
    }

    /// Largest `|xi|` on the lattice.
    pub fn max_wavenumber(&self) -> T {
        self.unit_wavenumber() * T::lit((self.inner.n / 2) as f64) * T::lit(self.inner.dim as f64).sqrt()
    }

    /// Per-axis lattice index of a flat point or mode index.
    pub fn axis_index(&self, idx: usize, axis: usize) -> usize {
        axis_index(idx, axis, self.inner.dim, self.inner.n)
    }

    pub fn flat_index(&self, ijk: &[usize]) -> usize {
        ijk.iter().fold(0, |acc, &j| acc * self.inner.n + (j % self.inner.n))
    }

    /// Signed integer wavenumber of mode `idx` along `axis`.
    pub fn integer_wavenumber(&self, idx: usize, axis: usize) -> i64 {
        self.inner.kint[self.axis_index(idx, axis)]
    }

    /// Component `axis` of the frequency `xi` of mode `idx`.
    pub fn xi(&self, idx: usize, axis: usize) -> T {
        self.unit_wavenumber() * T::lit(self.integer_wavenumber(idx, axis) as f64)
    }

    pub fn xi_vec(&self, idx: usize) -> [T; 3] {
        let mut out = [T::zero(); 3];
        for (a, o) in out.iter_mut().enumerate().take(self.inner.dim) {
            *o = self.xi(idx, a);
        }
        out
    }

    pub fn xi_norm(&self, idx: usize) -> T {
        self.inner.xi_norm[idx]
    }

    pub fn xi_norms(&self) -> &[T] {
        &self.inner.xi_norm
    }

    /// Whether any axis of mode `idx` sits at the Nyquist index.
    pub fn is_nyquist(&self, idx: usize) -> bool {
        self.inner.pad_map[idx].is_none()
    }

    /// Flat index of the mode `-xi`.
    pub fn conjugate_index(&self, idx: usize) -> usize {
        let n = self.inner.n;
        let mut out = 0;
        for a in 0..self.inner.dim {
            let j = self.axis_index(idx, a);
            out = out * n + (n - j) % n;
        }
        out
    }

    /// Coordinate `y_a = j_a L / n` of point `idx`.
    pub fn coordinate(&self, idx: usize, axis: usize) -> T {
        self.spacing() * T::usz(self.axis_index(idx, axis))
    }

    pub fn point(&self, idx: usize) -> [T; 3] {
        let mut out = [T::zero(); 3];
        for (a, o) in out.iter_mut().enumerate().take(self.inner.dim) {
            *o = self.coordinate(idx, a);
        }
        out
    }

    pub fn forward(&self, data: &mut [Complex<T>]) {
        self.inner.fft.forward(data);
    }

    pub fn inverse(&self, data: &mut [Complex<T>]) {
        self.inner.fft.inverse(data);
    }

    pub fn to_spectrum(&self, real: &[T]) -> Vec<Complex<T>> {
        let mut buf: Vec<Complex<T>> = real.iter().map(|&x| Complex::new(x, T::zero())).collect();
        self.forward(&mut buf);
        buf
    }

    /// Inverse transform keeping the real part.
    pub fn to_real(&self, spectrum: &[Complex<T>]) -> Vec<T> {
        let mut buf = spectrum.to_vec();
        self.inverse(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }

    /// Number of points per axis of the 3/2-padded lattice.
    pub fn fine_points_per_axis(&self) -> usize {
        self.inner.fine_n
    }

    pub fn fine_len(&self) -> usize {
        self.inner.fine.len()
    }

    /// Samples on the 3/2-padded lattice of the band-limited function with
    /// the given coarse spectrum (Nyquist modes dropped).
    pub fn to_fine(&self, spectrum: &[Complex<T>]) -> Vec<T> {
        let inner = &self.inner;
        let flen = inner.fine.len();
        let scale = T::usz(flen) / T::usz(inner.len);
        let mut buf = vec![Complex::new(T::zero(), T::zero()); flen];
        for (c, slot) in spectrum.iter().zip(&inner.pad_map) {
            if let Some(f) = slot {
                buf[*f] = *c * scale;
            }
        }
        inner.fine.inverse(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }

    /// Coarse spectrum of fine-lattice samples, truncated to the retained band.
    pub fn from_fine(&self, fine: &[T]) -> Vec<Complex<T>> {
        let inner = &self.inner;
        let flen = inner.fine.len();
        let mut buf: Vec<Complex<T>> = fine.iter().map(|&x| Complex::new(x, T::zero())).collect();
        inner.fine.forward(&mut buf);
        let scale = T::usz(inner.len) / T::usz(flen);
        inner
            .pad_map
            .iter()
            .map(|slot| match slot {
                Some(f) => buf[*f] * scale,
                None => Complex::new(T::zero(), T::zero()),
            })
            .collect()
    }

    /// Dealiased product of two band-limited functions given by their spectra.
    pub fn dealiased_product(&self, a: &[Complex<T>], b: &[Complex<T>]) -> Vec<Complex<T>> {
        let fa = self.to_fine(a);
        let fb = self.to_fine(b);
        let prod: Vec<T> = fa.iter().zip(&fb).map(|(x, y)| *x * *y).collect();
        self.from_fine(&prod)
    }

    pub(crate) fn check_same(&self, other: &Grid<T>) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::Mismatch(format!("{self:?} vs {other:?}")))
        }
    }
}

#[inline]
fn axis_index(idx: usize, axis: usize, dim: usize, n: usize) -> usize {
    (idx / n.pow((dim - 1 - axis) as u32)) % n
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        assert!(Grid::<f64>::new(1, 8, 1.0).is_err());
        assert!(Grid::<f64>::new(2, 6, 1.0).is_err());
        assert!(Grid::<f64>::new(2, 2, 1.0).is_err());
        assert!(Grid::<f64>::new(2, 8, -1.0).is_err());
        assert!(Grid::<f64>::new(3, 8, 2.0).is_ok());
    }

    #[test]
    fn wavenumbers_symmetric_except_nyquist() {
        let g = Grid::<f64>::new(2, 8, 2.0 * std::f64::consts::PI).unwrap();
        let ks: Vec<i64> = (0..8).map(|j| g.integer_wavenumber(j, 1)).collect();
        assert_eq!(ks, vec![0, 1, 2, 3, -4, -3, -2, -1]);
        let nyq = (0..g.len()).filter(|&i| g.is_nyquist(i)).count();
        assert_eq!(nyq, 8 + 8 - 1);
    }

    #[test]
    fn round_trip_is_exact() {
        let g = Grid::<f64>::new(3, 8, 3.0).unwrap();
        let f: Vec<f64> = (0..g.len()).map(|i| ((i * 37) % 101) as f64 / 7.0 - 3.0).collect();
        let back = g.to_real(&g.to_spectrum(&f));
        let err = f.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let scale = f.iter().map(|a| a.abs()).fold(0.0, f64::max);
        assert!(err / scale <= 1e-12, "{err}");
    }

    #[test]
    fn padded_samples_interpolate() {
        let l = 2.0 * std::f64::consts::PI;
        let g = Grid::<f64>::new(2, 8, l).unwrap();
        let f: Vec<f64> = (0..g.len()).map(|i| (g.coordinate(i, 0) + 2.0 * g.coordinate(i, 1)).sin()).collect();
        let fine = g.to_fine(&g.to_spectrum(&f));
        let m = g.fine_points_per_axis();
        let h = l / m as f64;
        for (idx, v) in fine.iter().enumerate() {
            let (i, j) = (idx / m, idx % m);
            let exact = (i as f64 * h + 2.0 * j as f64 * h).sin();
            assert!((v - exact).abs() < 1e-12);
        }
        let back = g.from_fine(&fine);
        let orig = g.to_spectrum(&f);
        for (a, b) in back.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-10);
        }
    }
}
