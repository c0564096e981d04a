//! Incompressible initial data.
//!
//! `U_0` is the displacement of the time-one flow of a divergence-free field
//! `w`, so `y -> y + U_0(y)` preserves volume exactly before sampling. The
//! velocity is `v_0(y) = vbar(y + U_0(y))` for a divergence-free `vbar`,
//! which makes the Eulerian velocity solenoidal.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{Field, Grid, Rank};
use crate::Scalar;

/// RK4 steps of the flow that builds `U_0`.
const FLOW_STEPS: usize = 200;

/// Which family the data is drawn from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSpec {
    Zero,
    /// random trigonometric stream functions with wavenumbers up to `modes`
    Periodic { amplitude: f64, velocity: f64, modes: usize },
    /// Gaussian-localised stream functions of width `width` around the box centre,
    /// zoomed by `zoom` (`U(y) -> U(c + zoom (y - c)) / zoom`)
    Compact {
        amplitude: f64,
        velocity: f64,
        width: f64,
        #[serde(default = "one")]
        zoom: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl DataSpec {
    pub fn validate(&self, dim: usize) -> Result<()> {
        if !(2..=3).contains(&dim) {
            return Err(Error::Parameter(format!("dimension {dim} not in {{2, 3}}")));
        }
        match *self {
            DataSpec::Zero => Ok(()),
            DataSpec::Periodic { amplitude, velocity, modes } => {
                if !(amplitude >= 0.0 && velocity >= 0.0) || modes == 0 {
                    return Err(Error::Parameter("periodic data needs amplitude, velocity >= 0 and modes >= 1".into()));
                }
                Ok(())
            }
            DataSpec::Compact { amplitude, velocity, width, zoom } => {
                if !(amplitude >= 0.0 && velocity >= 0.0 && width > 0.0 && zoom > 0.0) {
                    return Err(Error::Parameter("compact data needs amplitude, velocity >= 0 and width, zoom > 0".into()));
                }
                Ok(())
            }
        }
    }

    /// Same family with the zoom multiplied by `lambda`.
    pub fn zoomed(&self, lambda: f64) -> Result<Self> {
        match self {
            DataSpec::Compact { amplitude, velocity, width, zoom } => Ok(DataSpec::Compact {
                amplitude: *amplitude,
                velocity: *velocity,
                width: *width,
                zoom: zoom * lambda,
            }),
            DataSpec::Zero => Ok(DataSpec::Zero),
            DataSpec::Periodic { .. } => Err(Error::Parameter(
                "rescaling needs compactly supported data; periodic data is not scale covariant on the torus".into(),
            )),
        }
    }

    /// Samples `(U_0, v_0)` on `grid`.
    pub fn generate<T: Scalar>(&self, grid: &Grid<T>, seed: u64) -> Result<InitialData<T>> {
        let dim = grid.dim();
        self.validate(dim)?;
        let period = grid.period().as_f64();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (flow, vel, centre, zoom) = match *self {
            DataSpec::Zero => {
                return Ok(InitialData { u: Field::zeros(grid, Rank::Vector), v: Field::zeros(grid, Rank::Vector) })
            }
            DataSpec::Periodic { amplitude, velocity, modes } => (
                Solenoidal::periodic(dim, period, modes, amplitude, &mut rng),
                Solenoidal::periodic(dim, period, modes, velocity, &mut rng),
                [0.0; 3],
                1.0,
            ),
            DataSpec::Compact { amplitude, velocity, width, zoom } => {
                let c = [period / 2.0; 3];
                (
                    Solenoidal::compact(dim, c, width, amplitude, &mut rng),
                    Solenoidal::compact(dim, c, width, velocity, &mut rng),
                    c,
                    zoom,
                )
            }
        };
        let mut u = vec![vec![T::zero(); grid.len()]; dim];
        let mut v = vec![vec![T::zero(); grid.len()]; dim];
        for idx in 0..grid.len() {
            let pt = grid.point(idx);
            let mut y = [0.0; 3];
            for a in 0..dim {
                y[a] = centre[a] + zoom * (pt[a].as_f64() - centre[a]);
            }
            let x = flow.flow_map(y);
            let vb = vel.eval(x);
            for a in 0..dim {
                u[a][idx] = T::lit((x[a] - y[a]) / zoom);
                v[a][idx] = T::lit(vb[a]);
            }
        }
        Ok(InitialData {
            u: Field::from_components(grid, Rank::Vector, u)?,
            v: Field::from_components(grid, Rank::Vector, v)?,
        })
    }
}

/// Sampled initial displacement and velocity.
#[derive(Debug, Clone)]
pub struct InitialData<T: Scalar> {
    pub u: Field<T>,
    pub v: Field<T>,
}

/// Divergence-free field `curl` of a potential: `grad^perp psi` in 2D,
/// `curl Psi` in 3D.
#[derive(Debug, Clone)]
enum Solenoidal {
    /// per component of the potential: `(k, a, phase)` with
    /// `Psi_c = sum a cos(k . y + phase)`
    Trig { dim: usize, modes: Vec<Vec<([f64; 3], f64, f64)>> },
    /// `Psi_c = scale * (c0 + c . z) exp(-|z|^2 / 2)`, `z = (y - centre) / width`
    Gauss { dim: usize, centre: [f64; 3], width: f64, scale: f64, coeffs: Vec<[f64; 4]> },
}

fn potentials(dim: usize) -> usize {
    if dim == 2 {
        1
    } else {
        3
    }
}

impl Solenoidal {
    fn periodic(dim: usize, period: f64, kmax: usize, size: f64, rng: &mut ChaCha8Rng) -> Self {
        let unit = std::f64::consts::TAU / period;
        let count = 2 * dim;
        let mut modes = Vec::new();
        let mut total = 0.0;
        for _ in 0..potentials(dim) {
            let mut list = Vec::with_capacity(count);
            for _ in 0..count {
                let mut k = [0.0; 3];
                loop {
                    for kc in k.iter_mut().take(dim) {
                        *kc = rng.random_range(-(kmax as i64)..=kmax as i64) as f64;
                    }
                    if k.iter().any(|&x| x != 0.0) {
                        break;
                    }
                }
                let k2: f64 = k.iter().map(|x| x * x).sum::<f64>() * unit * unit;
                let a: f64 = rng.sample::<f64, _>(StandardNormal) / k2;
                let phase = rng.random_range(0.0..std::f64::consts::TAU);
                total += a.abs() * k2;
                list.push(([k[0] * unit, k[1] * unit, k[2] * unit], a, phase));
            }
            modes.push(list);
        }
        // `size` bounds the gradient of the field
        let norm = if total > 0.0 { size / total } else { 0.0 };
        for list in modes.iter_mut() {
            for m in list.iter_mut() {
                m.1 *= norm;
            }
        }
        Solenoidal::Trig { dim, modes }
    }

    fn compact(dim: usize, centre: [f64; 3], width: f64, size: f64, rng: &mut ChaCha8Rng) -> Self {
        let coeffs = (0..potentials(dim))
            .map(|_| {
                let mut c = [0.0; 4];
                c[0] = 1.0 + 0.5 * rng.sample::<f64, _>(StandardNormal);
                for x in c.iter_mut().skip(1).take(dim) {
                    *x = 0.5 * rng.sample::<f64, _>(StandardNormal);
                }
                c
            })
            .collect();
        Solenoidal::Gauss { dim, centre, width, scale: size * width * width, coeffs }
    }

    /// Gradient of every potential component, `[c][j] = d_j Psi_c`.
    fn potential_gradient(&self, y: [f64; 3]) -> [[f64; 3]; 3] {
        let mut g = [[0.0; 3]; 3];
        match self {
            Solenoidal::Trig { dim, modes } => {
                for (c, list) in modes.iter().enumerate() {
                    for (k, a, ph) in list {
                        let mut arg = *ph;
                        for j in 0..*dim {
                            arg += k[j] * y[j];
                        }
                        let s = arg.sin();
                        for j in 0..*dim {
                            g[c][j] -= a * k[j] * s;
                        }
                    }
                }
            }
            Solenoidal::Gauss { dim, centre, width, scale, coeffs } => {
                let mut z = [0.0; 3];
                let mut r2 = 0.0;
                for j in 0..*dim {
                    z[j] = (y[j] - centre[j]) / width;
                    r2 += z[j] * z[j];
                }
                let e = (-0.5 * r2).exp();
                for (c, co) in coeffs.iter().enumerate() {
                    let mut p = co[0];
                    for j in 0..*dim {
                        p += co[j + 1] * z[j];
                    }
                    for j in 0..*dim {
                        g[c][j] = scale / width * (co[j + 1] - p * z[j]) * e;
                    }
                }
            }
        }
        g
    }

    fn eval(&self, y: [f64; 3]) -> [f64; 3] {
        let g = self.potential_gradient(y);
        let dim = match self {
            Solenoidal::Trig { dim, .. } | Solenoidal::Gauss { dim, .. } => *dim,
        };
        if dim == 2 {
            [g[0][1], -g[0][0], 0.0]
        } else {
            [g[2][1] - g[1][2], g[0][2] - g[2][0], g[1][0] - g[0][1]]
        }
    }

    /// Endpoint of the time-one flow started at `y`.
    fn flow_map(&self, y: [f64; 3]) -> [f64; 3] {
        let h = 1.0 / FLOW_STEPS as f64;
        let mut x = y;
        let shift = |x: [f64; 3], k: [f64; 3], c: f64| [x[0] + c * k[0], x[1] + c * k[1], x[2] + c * k[2]];
        for _ in 0..FLOW_STEPS {
            let k1 = self.eval(x);
            let k2 = self.eval(shift(x, k1, 0.5 * h));
            let k3 = self.eval(shift(x, k2, 0.5 * h));
            let k4 = self.eval(shift(x, k3, h));
            for j in 0..3 {
                x[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            }
        }
        x
    }
}
