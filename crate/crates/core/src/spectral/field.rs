use std::fmt;
use std::sync::OnceLock;

use num_complex::Complex;

use super::grid::Grid;
use crate::error::{Error, Result};
use crate::scalar::{fabs, Scalar};

/// Tensor rank of a field; vectors and matrices have `dim` and `dim * dim` components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rank {
    Scalar,
    Vector,
    Matrix,
}

impl Rank {
    pub fn components(self, dim: usize) -> usize {
        match self {
            Rank::Scalar => 1,
            Rank::Vector => dim,
            Rank::Matrix => dim * dim,
        }
    }
}

impl fmt::Display for Rank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Rank::Scalar => "scalar",
            Rank::Vector => "vector",
            Rank::Matrix => "matrix",
        };
        f.write_str(s)
    }
}

/// Real samples of a scalar, vector or matrix function on a [`Grid`].
///
/// Matrix components are stored row-major: entry `(i, a)` sits at `i * dim + a`.
/// The spectral view is computed lazily and cached.
pub struct Field<T: Scalar> {
    grid: Grid<T>,
    rank: Rank,
    comps: Vec<Vec<T>>,
    spectral: OnceLock<Vec<Vec<Complex<T>>>>,
}

impl<T: Scalar> Clone for Field<T> {
    fn clone(&self) -> Self {
        Self {
            grid: self.grid.clone(),
            rank: self.rank,
            comps: self.comps.clone(),
            spectral: self.spectral.clone(),
        }
    }
}

impl<T: Scalar> fmt::Debug for Field<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Field")
            .field("grid", &self.grid)
            .field("rank", &self.rank)
            .finish_non_exhaustive()
    }
}

impl<T: Scalar> Field<T> {
    pub fn zeros(grid: &Grid<T>, rank: Rank) -> Self {
        let nc = rank.components(grid.dim());
        Self::from_parts(grid, rank, vec![vec![T::zero(); grid.len()]; nc])
    }

    fn from_parts(grid: &Grid<T>, rank: Rank, comps: Vec<Vec<T>>) -> Self {
        Self { grid: grid.clone(), rank, comps, spectral: OnceLock::new() }
    }

    pub fn from_components(grid: &Grid<T>, rank: Rank, comps: Vec<Vec<T>>) -> Result<Self> {
        let nc = rank.components(grid.dim());
        if comps.len() != nc {
            return Err(Error::Rank {
                expected: format!("{rank} with {nc} components"),
                found: format!("{} components", comps.len()),
            });
        }
        if let Some(bad) = comps.iter().find(|c| c.len() != grid.len()) {
            return Err(Error::Mismatch(format!(
                "component has {} samples, grid has {}",
                bad.len(),
                grid.len()
            )));
        }
        Ok(Self::from_parts(grid, rank, comps))
    }

    pub fn scalar(grid: &Grid<T>, samples: Vec<T>) -> Result<Self> {
        Self::from_components(grid, Rank::Scalar, vec![samples])
    }

    /// Samples `f(y)` at every lattice point; `f` receives the point and
    /// returns all components.
    pub fn from_fn<F>(grid: &Grid<T>, rank: Rank, mut f: F) -> Self
    where
        F: FnMut(&[T]) -> Vec<T>,
    {
        let nc = rank.components(grid.dim());
        let mut comps = vec![Vec::with_capacity(grid.len()); nc];
        for idx in 0..grid.len() {
            let p = grid.point(idx);
            let vals = f(&p[..grid.dim()]);
            assert_eq!(vals.len(), nc, "closure returned the wrong number of components");
            for (c, v) in comps.iter_mut().zip(vals) {
                c.push(v);
            }
        }
        Self::from_parts(grid, rank, comps)
    }

    pub fn scalar_fn<F>(grid: &Grid<T>, mut f: F) -> Self
    where
        F: FnMut(&[T]) -> T,
    {
        Self::from_fn(grid, Rank::Scalar, |y| vec![f(y)])
    }

    /// Builds a real field from component spectra (the inverse transform keeps the real part).
    pub fn from_spectra(grid: &Grid<T>, rank: Rank, spectra: Vec<Vec<Complex<T>>>) -> Result<Self> {
        let comps = spectra.iter().map(|s| grid.to_real(s)).collect();
        Self::from_components(grid, rank, comps)
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn rank(&self) -> Rank {
        self.rank
    }

    pub fn num_components(&self) -> usize {
        self.comps.len()
    }

    pub fn component(&self, c: usize) -> &[T] {
        &self.comps[c]
    }

    pub fn components(&self) -> &[Vec<T>] {
        &self.comps
    }

    /// Matrix entry `(i, a)`.
    pub fn entry(&self, i: usize, a: usize) -> &[T] {
        debug_assert_eq!(self.rank, Rank::Matrix);
        &self.comps[i * self.grid.dim() + a]
    }

    pub fn into_components(self) -> Vec<Vec<T>> {
        self.comps
    }

    /// Cached spectra of every component.
    pub fn spectra(&self) -> &[Vec<Complex<T>>] {
        self.spectral
            .get_or_init(|| self.comps.iter().map(|c| self.grid.to_spectrum(c)).collect())
    }

    pub fn map_components<F>(&self, mut f: F) -> Self
    where
        F: FnMut(&[T]) -> Vec<T>,
    {
        let comps = self.comps.iter().map(|c| f(c)).collect();
        Self::from_parts(&self.grid, self.rank, comps)
    }

    pub fn scale(&self, a: T) -> Self {
        self.map_components(|c| c.iter().map(|&x| x * a).collect())
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        self.grid.check_same(&other.grid)?;
        if self.rank != other.rank {
            return Err(Error::Rank { expected: self.rank.to_string(), found: other.rank.to_string() });
        }
        Ok(())
    }

    /// `a * self + b * other`.
    pub fn lin_comb(&self, a: T, other: &Self, b: T) -> Result<Self> {
        self.check_compatible(other)?;
        let comps = self
            .comps
            .iter()
            .zip(&other.comps)
            .map(|(x, y)| x.iter().zip(y).map(|(&p, &q)| a * p + b * q).collect())
            .collect();
        Ok(Self::from_parts(&self.grid, self.rank, comps))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.lin_comb(T::one(), other, T::one())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.lin_comb(T::one(), other, -T::one())
    }

    /// Mean of each component over the box.
    pub fn means(&self) -> Vec<T> {
        let n = T::usz(self.grid.len());
        self.comps.iter().map(|c| c.iter().fold(T::zero(), |s, &x| s + x) / n).collect()
    }

    pub fn max_abs(&self) -> T {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .fold(T::zero(), |m, &x| m.max(fabs(x)))
    }

    /// `L^2` norm over the box summed over components, by quadrature.
    pub fn l2_norm(&self) -> T {
        let s = self
            .comps
            .iter()
            .flat_map(|c| c.iter())
            .fold(T::zero(), |s, &x| s + x * x);
        (s * self.grid.cell_volume()).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().all(|c| c.iter().all(|x| x.is_finite()))
    }

    /// Spectral gradient: scalar to vector, vector to matrix with entry
    /// `(i, a) = d_a f^i`.
    pub fn gradient(&self) -> Result<Self> {
        let rank = match self.rank {
            Rank::Scalar => Rank::Vector,
            Rank::Vector => Rank::Matrix,
            Rank::Matrix => {
                return Err(Error::Rank { expected: "scalar or vector".into(), found: "matrix".into() })
            }
        };
        let dim = self.grid.dim();
        let mut comps = Vec::with_capacity(self.comps.len() * dim);
        for spec in self.spectra() {
            for a in 0..dim {
                comps.push(self.grid.to_real(&derivative_spectrum(&self.grid, spec, a)));
            }
        }
        Ok(Self::from_parts(&self.grid, rank, comps))
    }

    /// Spectral divergence: vector to scalar, matrix to vector (`sum_a d_a f^{ia}`).
    pub fn divergence(&self) -> Result<Self> {
        let dim = self.grid.dim();
        let (rank, rows) = match self.rank {
            Rank::Vector => (Rank::Scalar, 1),
            Rank::Matrix => (Rank::Vector, dim),
            Rank::Scalar => {
                return Err(Error::Rank { expected: "vector or matrix".into(), found: "scalar".into() })
            }
        };
        let spectra = self.spectra();
        let mut comps = Vec::with_capacity(rows);
        for i in 0..rows {
            let mut acc = vec![Complex::new(T::zero(), T::zero()); self.grid.len()];
            for a in 0..dim {
                let d = derivative_spectrum(&self.grid, &spectra[i * dim + a], a);
                for (s, v) in acc.iter_mut().zip(d) {
                    *s += v;
                }
            }
            comps.push(self.grid.to_real(&acc));
        }
        Ok(Self::from_parts(&self.grid, rank, comps))
    }
}

/// Spectrum of `d/dy_axis` applied to `spec`; odd symbols vanish at Nyquist.
pub(crate) fn derivative_spectrum<T: Scalar>(grid: &Grid<T>, spec: &[Complex<T>], axis: usize) -> Vec<Complex<T>> {
    let n = grid.points_per_axis();
    spec.iter()
        .enumerate()
        .map(|(idx, &c)| {
            if grid.axis_index(idx, axis) == n / 2 {
                Complex::new(T::zero(), T::zero())
            } else {
                c * Complex::new(T::zero(), grid.xi(idx, axis))
            }
        })
        .collect()
}
