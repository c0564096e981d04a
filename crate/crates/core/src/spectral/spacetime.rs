use num_complex::Complex;

use super::cutoff::taper;
use super::fft::StridedFft;
use super::field::{Field, Rank};
use super::grid::Grid;
use crate::error::{Error, Result};
use crate::scalar::{fabs, Scalar};

/// Uniform time samples `t_k = start + k * length / samples`, `k < samples`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TimeWindow<T> {
    pub start: T,
    pub length: T,
    pub samples: usize,
}

impl<T: Scalar> TimeWindow<T> {
    pub fn new(start: T, length: T, samples: usize) -> Result<Self> {
        if samples < 8 || samples % 2 != 0 {
            return Err(Error::InvalidGrid(format!("time samples {samples} must be even and >= 8")));
        }
        if !(length > T::zero()) || !length.is_finite() || !start.is_finite() {
            return Err(Error::InvalidGrid(format!("window length {length} must be positive")));
        }
        Ok(Self { start, length, samples })
    }

    pub fn dt(&self) -> T {
        self.length / T::usz(self.samples)
    }

    pub fn time(&self, k: usize) -> T {
        self.start + self.dt() * T::usz(k)
    }

    pub fn times(&self) -> Vec<T> {
        (0..self.samples).map(|k| self.time(k)).collect()
    }

    /// Signed integer temporal frequency index of FFT bin `k`.
    pub fn integer_frequency(&self, k: usize) -> i64 {
        let m = self.samples;
        if k < m / 2 {
            k as i64
        } else {
            k as i64 - m as i64
        }
    }

    /// Angular frequency `tau` of bin `k`.
    pub fn tau(&self, k: usize) -> T {
        T::two_pi() / self.length * T::lit(self.integer_frequency(k) as f64)
    }

    /// Smooth window equal to 1 on the central half and 0 at the endpoints.
    pub fn taper_weights(&self) -> Vec<T> {
        (0..self.samples)
            .map(|k| taper(T::usz(k) / T::usz(self.samples)))
            .collect()
    }
}

/// How the samples of a history relate to its time window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampling {
    /// plain samples; time-Fourier transforms are refused
    Raw,
    /// multiplied by the window taper
    Tapered,
    /// already smooth and periodic across the window ends
    Periodic,
}

/// A sampled history `t -> Field` on a [`TimeWindow`].
///
/// Each component stores `samples * grid.len()` reals, slice-major.
#[derive(Clone, Debug)]
pub struct SpaceTimeField<T: Scalar> {
    grid: Grid<T>,
    window: TimeWindow<T>,
    rank: Rank,
    sampling: Sampling,
    comps: Vec<Vec<T>>,
}

impl<T: Scalar> SpaceTimeField<T> {
    pub fn zeros(grid: &Grid<T>, window: TimeWindow<T>, rank: Rank) -> Self {
        let nc = rank.components(grid.dim());
        Self {
            grid: grid.clone(),
            window,
            rank,
            sampling: Sampling::Periodic,
            comps: vec![vec![T::zero(); grid.len() * window.samples]; nc],
        }
    }

    pub fn from_components(
        grid: &Grid<T>,
        window: TimeWindow<T>,
        rank: Rank,
        sampling: Sampling,
        comps: Vec<Vec<T>>,
    ) -> Result<Self> {
        let nc = rank.components(grid.dim());
        if comps.len() != nc {
            return Err(Error::Rank {
                expected: format!("{rank} with {nc} components"),
                found: format!("{} components", comps.len()),
            });
        }
        let want = grid.len() * window.samples;
        if comps.iter().any(|c| c.len() != want) {
            return Err(Error::Mismatch(format!("history components must hold {want} samples")));
        }
        Ok(Self { grid: grid.clone(), window, rank, sampling, comps })
    }

    /// Samples `f(t, y)` on the window.
    pub fn from_fn<F>(grid: &Grid<T>, window: TimeWindow<T>, rank: Rank, sampling: Sampling, mut f: F) -> Self
    where
        F: FnMut(T, &[T]) -> Vec<T>,
    {
        let nc = rank.components(grid.dim());
        let len = grid.len();
        let mut comps = vec![vec![T::zero(); len * window.samples]; nc];
        for k in 0..window.samples {
            let t = window.time(k);
            for idx in 0..len {
                let p = grid.point(idx);
                let vals = f(t, &p[..grid.dim()]);
                for (c, v) in comps.iter_mut().zip(vals) {
                    c[k * len + idx] = v;
                }
            }
        }
        Self { grid: grid.clone(), window, rank, sampling, comps }
    }

    pub fn from_slices(window: TimeWindow<T>, sampling: Sampling, slices: &[Field<T>]) -> Result<Self> {
        let first = slices
            .first()
            .ok_or_else(|| Error::Mismatch("history needs at least one slice".into()))?;
        if slices.len() != window.samples {
            return Err(Error::Mismatch(format!(
                "{} slices for a window of {} samples",
                slices.len(),
                window.samples
            )));
        }
        let grid = first.grid().clone();
        let rank = first.rank();
        let len = grid.len();
        let mut comps = vec![vec![T::zero(); len * window.samples]; first.num_components()];
        for (k, s) in slices.iter().enumerate() {
            grid.check_same(s.grid())?;
            if s.rank() != rank {
                return Err(Error::Rank { expected: rank.to_string(), found: s.rank().to_string() });
            }
            for (c, src) in comps.iter_mut().zip(s.components()) {
                c[k * len..(k + 1) * len].copy_from_slice(src);
            }
        }
        Ok(Self { grid, window, rank, sampling, comps })
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn window(&self) -> &TimeWindow<T> {
        &self.window
    }

    pub fn rank(&self) -> Rank {
        self.rank
    }

    pub fn sampling(&self) -> Sampling {
        self.sampling
    }

    pub fn components(&self) -> &[Vec<T>] {
        &self.comps
    }

    pub fn num_components(&self) -> usize {
        self.comps.len()
    }

    pub fn slice(&self, k: usize) -> Field<T> {
        let len = self.grid.len();
        let comps = self.comps.iter().map(|c| c[k * len..(k + 1) * len].to_vec()).collect();
        Field::from_components(&self.grid, self.rank, comps).expect("consistent slice")
    }

    /// Multiplies every slice by the window taper.
    pub fn tapered(&self) -> Self {
        let w = self.window.taper_weights();
        let len = self.grid.len();
        let comps = self
            .comps
            .iter()
            .map(|c| {
                c.chunks_exact(len)
                    .zip(&w)
                    .flat_map(|(row, &wk)| row.iter().map(move |&x| x * wk))
                    .collect()
            })
            .collect();
        Self { comps, sampling: Sampling::Tapered, ..self.clone() }
    }

    /// Declares the history periodic across the window ends.
    pub fn assume_periodic(mut self) -> Self {
        self.sampling = Sampling::Periodic;
        self
    }

    pub fn with_sampling(mut self, sampling: Sampling) -> Self {
        self.sampling = sampling;
        self
    }

    pub fn lin_comb(&self, a: T, other: &Self, b: T) -> Result<Self> {
        self.check_compatible(other)?;
        let comps = self
            .comps
            .iter()
            .zip(&other.comps)
            .map(|(x, y)| x.iter().zip(y).map(|(&p, &q)| a * p + b * q).collect())
            .collect();
        let sampling = if self.sampling == other.sampling { self.sampling } else { Sampling::Raw };
        Ok(Self { comps, sampling, ..self.clone() })
    }

    pub fn scale(&self, a: T) -> Self {
        let comps = self.comps.iter().map(|c| c.iter().map(|&x| a * x).collect()).collect();
        Self { comps, ..self.clone() }
    }

    pub(crate) fn check_compatible(&self, other: &Self) -> Result<()> {
        self.grid.check_same(&other.grid)?;
        if self.window != other.window {
            return Err(Error::Mismatch(format!("{:?} vs {:?}", self.window, other.window)));
        }
        if self.rank != other.rank {
            return Err(Error::Rank { expected: self.rank.to_string(), found: other.rank.to_string() });
        }
        Ok(())
    }

    pub fn max_abs(&self) -> T {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .fold(T::zero(), |m, &x| m.max(fabs(x)))
    }

    /// Space-time spectrum of every component, `[tau bin][xi mode]` row-major.
    ///
    /// Unnormalized in both variables. Raw histories are refused.
    pub fn space_time_spectra(&self) -> Result<Vec<Vec<Complex<T>>>> {
        if self.sampling == Sampling::Raw {
            return Err(Error::NotTapered);
        }
        let len = self.grid.len();
        let time_fft = StridedFft::new(self.window.samples);
        Ok(self
            .comps
            .iter()
            .map(|c| {
                let mut buf: Vec<Complex<T>> = c.iter().map(|&x| Complex::new(x, T::zero())).collect();
                for row in buf.chunks_exact_mut(len) {
                    self.grid.forward(row);
                }
                time_fft.forward(&mut buf, len);
                buf
            })
            .collect())
    }

    /// Inverse of [`space_time_spectra`](Self::space_time_spectra), keeping real parts.
    pub fn from_space_time_spectra(
        grid: &Grid<T>,
        window: TimeWindow<T>,
        rank: Rank,
        sampling: Sampling,
        spectra: Vec<Vec<Complex<T>>>,
    ) -> Result<Self> {
        let len = grid.len();
        let time_fft = StridedFft::new(window.samples);
        let comps = spectra
            .into_iter()
            .map(|mut buf| {
                time_fft.inverse(&mut buf, len);
                for row in buf.chunks_exact_mut(len) {
                    grid.inverse(row);
                }
                buf.into_iter().map(|c| c.re).collect()
            })
            .collect();
        Self::from_components(grid, window, rank, sampling, comps)
    }

    /// Spectral time derivative on the window.
    pub fn time_derivative(&self) -> Result<Self> {
        let mut spectra = self.space_time_spectra()?;
        let len = self.grid.len();
        let m = self.window.samples;
        for buf in spectra.iter_mut() {
            for (k, row) in buf.chunks_exact_mut(len).enumerate() {
                // odd symbol: the Nyquist bin is dropped
                let factor = if k == m / 2 {
                    Complex::new(T::zero(), T::zero())
                } else {
                    Complex::new(T::zero(), self.window.tau(k))
                };
                for c in row.iter_mut() {
                    *c *= factor;
                }
            }
        }
        Self::from_space_time_spectra(&self.grid, self.window, self.rank, self.sampling, spectra)
    }

    /// Spectral spatial gradient, slice by slice.
    pub fn gradient(&self) -> Result<Self> {
        let slices: Result<Vec<_>> = (0..self.window.samples).map(|k| self.slice(k).gradient()).collect();
        Self::from_slices(self.window, self.sampling, &slices?)
    }
}
