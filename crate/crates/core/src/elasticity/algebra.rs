//! Pointwise algebra of the deformation gradient.

use crate::error::{Error, Result};
use crate::scalar::{fabs, Scalar};
use crate::spectral::{Field, Rank};

/// Determinant of a row-major `dim x dim` matrix, `dim` in {2, 3}.
#[inline]
pub fn det<T: Scalar>(m: &[T], dim: usize) -> T {
    match dim {
        2 => m[0] * m[3] - m[1] * m[2],
        3 => {
            m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6])
                + m[2] * (m[3] * m[7] - m[4] * m[6])
        }
        _ => unreachable!("dimension checked by Grid"),
    }
}

/// Adjugate (transposed cofactor matrix): `m * adj(m) = det(m) E`.
#[inline]
pub fn adjugate<T: Scalar>(m: &[T], dim: usize, out: &mut [T]) {
    match dim {
        2 => {
            out[0] = m[3];
            out[1] = -m[1];
            out[2] = -m[2];
            out[3] = m[0];
        }
        3 => {
            for i in 0..3 {
                let (i1, i2) = ((i + 1) % 3, (i + 2) % 3);
                for j in 0..3 {
                    let (j1, j2) = ((j + 1) % 3, (j + 2) % 3);
                    out[i * 3 + j] = m[j1 * 3 + i1] * m[j2 * 3 + i2] - m[j1 * 3 + i2] * m[j2 * 3 + i1];
                }
            }
        }
        _ => unreachable!("dimension checked by Grid"),
    }
}

/// Derivative of [`adjugate`] at `m` in direction `dm`.
#[inline]
pub fn adjugate_derivative<T: Scalar>(m: &[T], dm: &[T], dim: usize, out: &mut [T]) {
    match dim {
        2 => adjugate(dm, 2, out),
        3 => {
            for i in 0..3 {
                let (i1, i2) = ((i + 1) % 3, (i + 2) % 3);
                for j in 0..3 {
                    let (j1, j2) = ((j + 1) % 3, (j + 2) % 3);
                    out[i * 3 + j] = dm[j1 * 3 + i1] * m[j2 * 3 + i2] + m[j1 * 3 + i1] * dm[j2 * 3 + i2]
                        - dm[j1 * 3 + i2] * m[j2 * 3 + i1]
                        - m[j1 * 3 + i2] * dm[j2 * 3 + i1];
                }
            }
        }
        _ => unreachable!("dimension checked by Grid"),
    }
}

fn check_matrix<T: Scalar>(f: &Field<T>) -> Result<()> {
    if f.rank() != Rank::Matrix {
        return Err(Error::Rank { expected: "matrix".into(), found: f.rank().to_string() });
    }
    Ok(())
}

fn gather<T: Scalar>(f: &Field<T>, idx: usize, buf: &mut [T]) {
    for (b, c) in buf.iter_mut().zip(f.components()) {
        *b = c[idx];
    }
}

/// Pointwise cofactor inverse: the adjugate of `F`, equal to `F^{-1}` where `det F = 1`.
pub fn cofactor_inverse<T: Scalar>(f: &Field<T>) -> Result<Field<T>> {
    check_matrix(f)?;
    let dim = f.grid().dim();
    let nc = dim * dim;
    let mut comps = vec![Vec::with_capacity(f.grid().len()); nc];
    let mut m = [T::zero(); 9];
    let mut a = [T::zero(); 9];
    for idx in 0..f.grid().len() {
        gather(f, idx, &mut m[..nc]);
        adjugate(&m[..nc], dim, &mut a[..nc]);
        for (c, v) in comps.iter_mut().zip(&a[..nc]) {
            c.push(*v);
        }
    }
    Field::from_components(f.grid(), Rank::Matrix, comps)
}

/// Pointwise determinant of a matrix field.
pub fn determinant<T: Scalar>(f: &Field<T>) -> Result<Field<T>> {
    check_matrix(f)?;
    let dim = f.grid().dim();
    let nc = dim * dim;
    let mut m = [T::zero(); 9];
    let samples = (0..f.grid().len())
        .map(|idx| {
            gather(f, idx, &mut m[..nc]);
            det(&m[..nc], dim)
        })
        .collect();
    Field::scalar(f.grid(), samples)
}

/// `E + G` for a displacement gradient `G`.
pub fn identity_plus<T: Scalar>(g: &Field<T>) -> Result<Field<T>> {
    check_matrix(g)?;
    let dim = g.grid().dim();
    let comps = g
        .components()
        .iter()
        .enumerate()
        .map(|(c, v)| {
            if c / dim == c % dim {
                v.iter().map(|&x| T::one() + x).collect()
            } else {
                v.clone()
            }
        })
        .collect();
    Field::from_components(g.grid(), Rank::Matrix, comps)
}

/// Pointwise matrix product `A B` of matrix fields.
pub fn matmul<T: Scalar>(a: &Field<T>, b: &Field<T>) -> Result<Field<T>> {
    check_matrix(a)?;
    check_matrix(b)?;
    a.grid().check_same(b.grid())?;
    let dim = a.grid().dim();
    let len = a.grid().len();
    let mut comps = vec![vec![T::zero(); len]; dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            let out = &mut comps[i * dim + j];
            for k in 0..dim {
                let (x, y) = (a.entry(i, k), b.entry(k, j));
                for p in 0..len {
                    out[p] += x[p] * y[p];
                }
            }
        }
    }
    Field::from_components(a.grid(), Rank::Matrix, comps)
}

/// Largest pointwise Frobenius norm.
pub fn max_frobenius<T: Scalar>(f: &Field<T>) -> T {
    (0..f.grid().len())
        .map(|idx| f.components().iter().fold(T::zero(), |s, c| s + c[idx] * c[idx]).sqrt())
        .fold(T::zero(), T::max)
}

/// `max |det F - 1|`.
pub fn det_drift<T: Scalar>(f: &Field<T>) -> Result<T> {
    Ok(determinant(f)?.component(0).iter().fold(T::zero(), |m, &d| m.max(fabs(d - T::one()))))
}

/// `max |det F - 1|` over the grid points whose indices are all multiples
/// of `every`. With `every = 2` the points are those of the grid with half
/// the resolution, so sup norms of two refinements are taken on one set.
pub fn det_drift_subsampled<T: Scalar>(f: &Field<T>, every: usize) -> Result<T> {
    if every == 0 || f.grid().points_per_axis() % every != 0 {
        return Err(Error::Parameter(format!(
            "subsampling stride {every} does not divide {} points per axis",
            f.grid().points_per_axis()
        )));
    }
    let d = determinant(f)?;
    let grid = f.grid();
    Ok((0..grid.len())
        .filter(|&idx| (0..grid.dim()).all(|a| grid.axis_index(idx, a) % every == 0))
        .fold(T::zero(), |m, idx| m.max(fabs(d.component(0)[idx] - T::one()))))
}
