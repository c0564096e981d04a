//! Lagrangian pressure equation.
//!
//! With `A = adj(E + G)` (the inverse of `F` when `det F = 1`) and
//! `d/dx^i = A^{ai} d/dy^a`, the pressure satisfies
//!
//! ```text
//! Delta_x p = -A^{ai} A^{bm} Q0(G^{ma}, G^{ib})
//! Delta_x p = Delta_y p + (C^{ab} - delta^{ab}) d_a d_b p + A^{ai} (d_a A^{bi}) d_b p,   C = A A^T
//! ```
//!
//! and is solved by the fixed point `p <- Delta_y^{-1} P0 (rhs - (Delta_x - Delta_y) p)`.
//! Every product is formed on the 3/2-padded lattice and truncated back.

use num_complex::Complex;

use super::algebra::{adjugate, adjugate_derivative};
use crate::error::{Error, Result};
use crate::scalar::{fabs, Scalar};
use crate::spectral::{derivative_spectrum, Field, Grid, Rank};

pub(crate) type Spectra<T> = Vec<Vec<Complex<T>>>;

/// Iteration cap of the pressure fixed point.
pub const PRESSURE_MAX_ITERATIONS: usize = 200;

/// Variable-coefficient operator `Delta_x` frozen at one displacement gradient.
pub struct PressureOperator<T: Scalar> {
    grid: Grid<T>,
    /// `A^{ai}` at `a * dim + i`, fine lattice
    adj: Vec<Vec<T>>,
    /// `C^{ab} - delta^{ab}`, fine lattice
    metric: Vec<Vec<T>>,
    /// `A^{ai} d_a A^{bi}`, fine lattice
    drift: Vec<Vec<T>>,
    /// `d_c G^{ia}` at `(i * dim + a) * dim + c`, fine lattice
    dg: Vec<Vec<T>>,
    g_inf: T,
}

/// Converged pressure with its iteration history.
#[derive(Debug, Clone)]
pub struct PressureSolution<T: Scalar> {
    pub p: Field<T>,
    pub iterations: usize,
    /// final `||rhs - Delta_x p|| / ||rhs||`
    pub residual: T,
    /// ratios of successive residuals
    pub factors: Vec<T>,
}

fn zero_spec<T: Scalar>(len: usize) -> Vec<Complex<T>> {
    vec![Complex::new(T::zero(), T::zero()); len]
}

pub(crate) fn spec_norm<T: Scalar>(s: &[Complex<T>]) -> T {
    s.iter().fold(T::zero(), |a, c| a + c.norm_sqr()).sqrt()
}

impl<T: Scalar> PressureOperator<T> {
    /// Builds the operator from the spectra of the `dim * dim` entries of `G`.
    pub(crate) fn from_spectra(grid: &Grid<T>, g: &[Vec<Complex<T>>]) -> Self {
        let dim = grid.dim();
        let nc = dim * dim;
        let flen = grid.fine_len();
        let g_fine: Vec<Vec<T>> = g.iter().map(|s| grid.to_fine(s)).collect();
        let mut dg = Vec::with_capacity(nc * dim);
        for s in g {
            for c in 0..dim {
                dg.push(grid.to_fine(&derivative_spectrum(grid, s, c)));
            }
        }
        let mut adj = vec![vec![T::zero(); flen]; nc];
        let mut metric = vec![vec![T::zero(); flen]; nc];
        let mut drift = vec![vec![T::zero(); flen]; dim];
        let mut fm = [T::zero(); 9];
        let mut am = [T::zero(); 9];
        let mut dfm = [T::zero(); 9];
        let mut dam = [[T::zero(); 9]; 3];
        let mut g_inf = T::zero();
        for p in 0..flen {
            for c in 0..nc {
                let gv = g_fine[c][p];
                g_inf = g_inf.max(fabs(gv));
                fm[c] = gv + if c / dim == c % dim { T::one() } else { T::zero() };
            }
            adjugate(&fm[..nc], dim, &mut am[..nc]);
            for (c, da) in dam.iter_mut().enumerate().take(dim) {
                for e in 0..nc {
                    dfm[e] = dg[e * dim + c][p];
                }
                adjugate_derivative(&fm[..nc], &dfm[..nc], dim, &mut da[..nc]);
            }
            for e in 0..nc {
                adj[e][p] = am[e];
            }
            for a in 0..dim {
                for b in 0..dim {
                    let mut c_ab = if a == b { -T::one() } else { T::zero() };
                    for i in 0..dim {
                        c_ab += am[a * dim + i] * am[b * dim + i];
                    }
                    metric[a * dim + b][p] = c_ab;
                }
            }
            for b in 0..dim {
                let mut s = T::zero();
                for a in 0..dim {
                    for i in 0..dim {
                        s += am[a * dim + i] * dam[a][b * dim + i];
                    }
                }
                drift[b][p] = s;
            }
        }
        Self { grid: grid.clone(), adj, metric, drift, dg, g_inf }
    }

    /// Operator for the displacement gradient `g` (a matrix field).
    pub fn new(g: &Field<T>) -> Result<Self> {
        if g.rank() != Rank::Matrix {
            return Err(Error::Rank { expected: "matrix".into(), found: g.rank().to_string() });
        }
        Ok(Self::from_spectra(g.grid(), g.spectra()))
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    /// `max |G|` over the padded lattice.
    pub fn g_inf(&self) -> T {
        self.g_inf
    }

    /// Spectrum of `-A^{ai} A^{bm} Q0(G^{ma}, G^{ib})` with the mean removed,
    /// given the spectra of `d_t G`.
    pub(crate) fn source_spectrum(&self, gt: &[Vec<Complex<T>>]) -> Vec<Complex<T>> {
        let grid = &self.grid;
        let dim = grid.dim();
        let flen = grid.fine_len();
        let gt_fine: Vec<Vec<T>> = gt.iter().map(|s| grid.to_fine(s)).collect();
        let mut out = vec![T::zero(); flen];
        for (p, o) in out.iter_mut().enumerate() {
            let mut acc = T::zero();
            for a in 0..dim {
                for i in 0..dim {
                    let aai = self.adj[a * dim + i][p];
                    for b in 0..dim {
                        for m in 0..dim {
                            let abm = self.adj[b * dim + m][p];
                            let ma = m * dim + a;
                            let ib = i * dim + b;
                            let mut q0 = gt_fine[ma][p] * gt_fine[ib][p];
                            for c in 0..dim {
                                q0 -= self.dg[ma * dim + c][p] * self.dg[ib * dim + c][p];
                            }
                            acc -= aai * abm * q0;
                        }
                    }
                }
            }
            *o = acc;
        }
        let mut spec = grid.from_fine(&out);
        spec[0] = Complex::new(T::zero(), T::zero());
        spec
    }

    /// `(Delta_x - Delta_y) p` in spectral form.
    pub(crate) fn correction_spectrum(&self, p: &[Complex<T>]) -> Vec<Complex<T>> {
        let grid = &self.grid;
        let dim = grid.dim();
        let flen = grid.fine_len();
        let first: Vec<Vec<Complex<T>>> = (0..dim).map(|a| derivative_spectrum(grid, p, a)).collect();
        let mut acc = vec![T::zero(); flen];
        for a in 0..dim {
            let da = grid.to_fine(&first[a]);
            let drift = &self.drift[a];
            for q in 0..flen {
                acc[q] += drift[q] * da[q];
            }
            for b in a..dim {
                let dab = grid.to_fine(&derivative_spectrum(grid, &first[a], b));
                let weight = if a == b { T::one() } else { T::lit(2.0) };
                let m = &self.metric[a * dim + b];
                for q in 0..flen {
                    acc[q] += weight * m[q] * dab[q];
                }
            }
        }
        grid.from_fine(&acc)
    }

    /// `Delta_x p` in spectral form.
    pub(crate) fn apply_spectrum(&self, p: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut out = self.correction_spectrum(p);
        for (idx, o) in out.iter_mut().enumerate() {
            let r = self.grid.xi_norm(idx);
            *o -= p[idx] * (r * r);
        }
        out
    }

    /// `Delta_x p` for a scalar field.
    pub fn apply(&self, p: &Field<T>) -> Result<Field<T>> {
        check_scalar(p)?;
        self.grid.check_same(p.grid())?;
        Field::from_spectra(&self.grid, Rank::Scalar, vec![self.apply_spectrum(&p.spectra()[0])])
    }

    /// `d_i q = A^{ai} d_a q` for every `i`, spectral in and out.
    pub(crate) fn euler_gradient_spectra(&self, q: &[Complex<T>]) -> Spectra<T> {
        let grid = &self.grid;
        let dim = grid.dim();
        let flen = grid.fine_len();
        let dq: Vec<Vec<T>> = (0..dim).map(|a| grid.to_fine(&derivative_spectrum(grid, q, a))).collect();
        (0..dim)
            .map(|i| {
                let mut acc = vec![T::zero(); flen];
                for a in 0..dim {
                    let w = &self.adj[a * dim + i];
                    for p in 0..flen {
                        acc[p] += w[p] * dq[a][p];
                    }
                }
                grid.from_fine(&acc)
            })
            .collect()
    }

    /// `Delta_x p` as `sum_i d_i (d_i p)`, an independent route to [`apply`](Self::apply).
    pub fn apply_composed(&self, p: &Field<T>) -> Result<Field<T>> {
        check_scalar(p)?;
        let first = self.euler_gradient_spectra(&p.spectra()[0]);
        let mut acc = zero_spec(self.grid.len());
        for (i, fi) in first.iter().enumerate() {
            let second = self.euler_gradient_spectra(fi);
            for (a, v) in acc.iter_mut().zip(&second[i]) {
                *a += *v;
            }
        }
        Field::from_spectra(&self.grid, Rank::Scalar, vec![acc])
    }

    /// Solves `Delta_x p = rhs` (mean removed) to relative residual `tol`,
    /// starting from `init` when given.
    pub(crate) fn solve_spectrum(
        &self,
        rhs: &[Complex<T>],
        tol: T,
        init: Option<&[Complex<T>]>,
    ) -> Result<(Vec<Complex<T>>, usize, T, Vec<T>)> {
        let grid = &self.grid;
        let len = grid.len();
        let mut rhs0 = rhs.to_vec();
        rhs0[0] = Complex::new(T::zero(), T::zero());
        let scale = spec_norm(&rhs0);
        if scale == T::zero() {
            return Ok((zero_spec(len), 0, T::zero(), Vec::new()));
        }
        let warm = init.is_some();
        let mut p = match init {
            Some(p0) => {
                let mut p = p0.to_vec();
                p[0] = Complex::new(T::zero(), T::zero());
                p
            }
            None => zero_spec(len),
        };
        let mut factors = Vec::new();
        let mut prev: Option<T> = None;
        let mut streak = 0;
        let mut iterations = 0;
        loop {
            let lp = if iterations == 0 && !warm { zero_spec(len) } else { self.apply_spectrum(&p) };
            let mut r: Vec<Complex<T>> = rhs0.iter().zip(&lp).map(|(a, b)| *a - *b).collect();
            r[0] = Complex::new(T::zero(), T::zero());
            let rel = spec_norm(&r) / scale;
            if !rel.is_finite() {
                return Err(Error::PressureDivergence { iterations, g_inf: self.g_inf.as_f64() });
            }
            if let Some(pr) = prev {
                factors.push(rel / pr);
                if rel >= pr {
                    streak += 1;
                    if streak >= 3 {
                        return Err(Error::PressureDivergence { iterations, g_inf: self.g_inf.as_f64() });
                    }
                } else {
                    streak = 0;
                }
            }
            if rel <= tol {
                return Ok((p, iterations, rel, factors));
            }
            if iterations >= PRESSURE_MAX_ITERATIONS {
                return Err(Error::PressureNotConverged { iterations, residual: rel.as_f64() });
            }
            prev = Some(rel);
            for (idx, (pv, rv)) in p.iter_mut().zip(&r).enumerate().skip(1) {
                let k = grid.xi_norm(idx);
                *pv -= *rv / (k * k);
            }
            iterations += 1;
        }
    }

    /// Solves `Delta_x p = rhs` for a scalar field.
    pub fn solve(&self, rhs: &Field<T>, tol: T) -> Result<PressureSolution<T>> {
        check_scalar(rhs)?;
        self.grid.check_same(rhs.grid())?;
        let (p, iterations, residual, factors) = self.solve_spectrum(&rhs.spectra()[0], tol, None)?;
        Ok(PressureSolution { p: Field::from_spectra(&self.grid, Rank::Scalar, vec![p])?, iterations, residual, factors })
    }

    /// Vector forcing `d p / d x^i = A^{ai} d_a p` and matrix forcing
    /// `d/dy^a (d p / d x^i)`, both spectral.
    pub(crate) fn forcing_spectra(&self, p: &[Complex<T>]) -> (Spectra<T>, Spectra<T>) {
        let vector = self.euler_gradient_spectra(p);
        let dim = self.grid.dim();
        let mut matrix = Vec::with_capacity(dim * dim);
        for fi in &vector {
            for a in 0..dim {
                matrix.push(derivative_spectrum(&self.grid, fi, a));
            }
        }
        (vector, matrix)
    }
}

fn check_scalar<T: Scalar>(f: &Field<T>) -> Result<()> {
    if f.rank() != Rank::Scalar {
        return Err(Error::Rank { expected: "scalar".into(), found: f.rank().to_string() });
    }
    Ok(())
}
