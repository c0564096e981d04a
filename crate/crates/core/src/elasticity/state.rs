use super::algebra::{cofactor_inverse, det_drift, identity_plus};
use super::pressure::{PressureOperator, PressureSolution};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spectral::{Field, Rank};

/// One time slice of the Lagrangian state.
#[derive(Debug, Clone)]
pub struct DeformationState<T: Scalar> {
    pub t: T,
    /// displacement `U`, with `x = y + U`
    pub u: Field<T>,
    /// velocity `d_t U`
    pub v: Field<T>,
    /// `G^{ia} = d U^i / d y^a`
    pub g: Field<T>,
    /// `F = E + G`
    pub f: Field<T>,
    /// cofactor inverse of `F`
    pub finv: Field<T>,
    /// zero-mean pressure, once solved
    pub p: Option<Field<T>>,
    /// `max |det F - 1|`
    pub det_drift: T,
    /// set when `det_drift` exceeds the budget passed to [`gradient_state`]
    pub constraint_warning: Option<Error>,
}

/// Matrix and vector forcing of the wave system.
#[derive(Debug, Clone)]
pub struct Forcing<T: Scalar> {
    /// `d p / d x^i`, drives `U`
    pub vector: Field<T>,
    /// `d/d y^a (d p / d x^i)`, drives `G`
    pub matrix: Field<T>,
}

/// Builds the state at time `t` from `U` and `V = d_t U`.
pub fn gradient_state<T: Scalar>(t: T, u: &Field<T>, v: &Field<T>, det_budget: Option<T>) -> Result<DeformationState<T>> {
    if u.rank() != Rank::Vector || v.rank() != Rank::Vector {
        return Err(Error::Rank { expected: "vector".into(), found: format!("{} / {}", u.rank(), v.rank()) });
    }
    u.grid().check_same(v.grid())?;
    let g = u.gradient()?;
    let f = identity_plus(&g)?;
    let finv = cofactor_inverse(&f)?;
    let drift = det_drift(&f)?;
    let constraint_warning = match det_budget {
        Some(b) if drift > b => {
            Some(Error::ConstraintViolation { t: t.as_f64(), drift: drift.as_f64(), budget: b.as_f64() })
        }
        _ => None,
    };
    Ok(DeformationState {
        t,
        u: u.clone(),
        v: v.clone(),
        g,
        f,
        finv,
        p: None,
        det_drift: drift,
        constraint_warning,
    })
}

impl<T: Scalar> DeformationState<T> {
    /// `d_t G`, taken as the spatial gradient of `V`.
    pub fn g_dot(&self) -> Result<Field<T>> {
        self.v.gradient()
    }

    pub fn pressure_operator(&self) -> PressureOperator<T> {
        PressureOperator::from_spectra(self.g.grid(), self.g.spectra())
    }

    /// Zero-mean pressure source `-A^{ai} A^{bm} Q0(G^{ma}, G^{ib})`.
    pub fn pressure_rhs(&self) -> Result<Field<T>> {
        let op = self.pressure_operator();
        let gt = self.g_dot()?;
        Field::from_spectra(self.g.grid(), Rank::Scalar, vec![op.source_spectrum(gt.spectra())])
    }

    pub fn solve_pressure(&self, tol: T) -> Result<PressureSolution<T>> {
        let op = self.pressure_operator();
        let gt = self.g_dot()?;
        let rhs = op.source_spectrum(gt.spectra());
        let (p, iterations, residual, factors) = op.solve_spectrum(&rhs, tol, None)?;
        Ok(PressureSolution {
            p: Field::from_spectra(self.g.grid(), Rank::Scalar, vec![p])?,
            iterations,
            residual,
            factors,
        })
    }

    /// Solves for the pressure and stores it in the state.
    pub fn with_pressure(mut self, tol: T) -> Result<(Self, PressureSolution<T>)> {
        let sol = self.solve_pressure(tol)?;
        self.p = Some(sol.p.clone());
        Ok((self, sol))
    }

    pub fn forcing_term(&self, p: &Field<T>) -> Result<Forcing<T>> {
        forcing_term(self, p)
    }
}

/// `d p / d x` and its `y`-gradient.
pub fn forcing_term<T: Scalar>(state: &DeformationState<T>, p: &Field<T>) -> Result<Forcing<T>> {
    if p.rank() != Rank::Scalar {
        return Err(Error::Rank { expected: "scalar".into(), found: p.rank().to_string() });
    }
    state.g.grid().check_same(p.grid())?;
    let op = state.pressure_operator();
    let (vector, matrix) = op.forcing_spectra(&p.spectra()[0]);
    let grid = p.grid();
    Ok(Forcing {
        vector: Field::from_spectra(grid, Rank::Vector, vector)?,
        matrix: Field::from_spectra(grid, Rank::Matrix, matrix)?,
    })
}

/// `F * (d/dx)(d/dx) p`, entry `(i, a) = F^{ja} d_j d_i p`. Equals `det F`
/// times the matrix forcing.
pub fn forcing_hessian_route<T: Scalar>(state: &DeformationState<T>, p: &Field<T>) -> Result<Field<T>> {
    let grid = p.grid();
    let dim = grid.dim();
    let op = state.pressure_operator();
    let first = op.euler_gradient_spectra(&p.spectra()[0]);
    // hess[i][j] = d_j d_i p
    let hess: Vec<Vec<Vec<T>>> = first
        .iter()
        .map(|fi| op.euler_gradient_spectra(fi).iter().map(|s| grid.to_fine(s)).collect())
        .collect();
    let f_fine: Vec<Vec<T>> = state.f.spectra().iter().map(|s| grid.to_fine(s)).collect();
    let flen = grid.fine_len();
    let mut comps = Vec::with_capacity(dim * dim);
    for i in 0..dim {
        for a in 0..dim {
            let mut acc = vec![T::zero(); flen];
            for j in 0..dim {
                let fj = &f_fine[j * dim + a];
                let h = &hess[i][j];
                for q in 0..flen {
                    acc[q] += fj[q] * h[q];
                }
            }
            comps.push(grid.from_fine(&acc));
        }
    }
    Field::from_spectra(grid, Rank::Matrix, comps)
}
