//! The contraction map
//!
//! ```text
//! M G = chi(t) W[G_0, G_1](t) + chi(t/T) int_0^t D^{-1} sin((t-t') D) F_1(t') dt' + box^{-1} F_2 - chi(t) W[c]
//! ```
//!
//! on a periodic time window, where `F = -f_mat[G]` is the matrix forcing of
//! the input iterate, `F_1 = phi(sqrt(T) Lambda_-) F` its near-cone part and
//! `F_2 = F - F_1`. `W[a, b]` is the free wave with data `(a, b)` at `t = 0`.
//! `box^{-1} F_2` does not vanish at `t = 0`; the free wave `W[c]` with its
//! data removes it so `M G` keeps the data `(grad U_0, grad v_0)`.
//!
//! Histories are held as spatial spectra per time slice, `[k * len + idx]`.

use num_complex::Complex;

use super::config::{DuhamelRule, RunConfig};
use super::data::InitialData;
use super::diagnostics::{strichartz_exponent, DiagnosticsRecord, DiagnosticsRow};
use crate::elasticity::{det_drift, identity_plus, PressureOperator};
use crate::error::{Error, Result};
use crate::norms::{hst_weight, sobolev_norm, space_time_weighted_spectra};
use crate::scalar::{fabs, Scalar};
use crate::spectral::cutoff::{divide_by_box_spectra, near_cone_weight, taper};
use crate::spectral::{
    cutoff_chi, cutoff_chi_derivative, derivative_spectrum, propagate_spectra, Field, Grid, Rank, Sampling,
    SpaceTimeField, StridedFft, TimeWindow,
};

type Hist<T> = Vec<Vec<Complex<T>>>;

/// `|tau +- omega|` below which a Duhamel term is treated as resonant.
const RESONANCE: f64 = 1e-9;

/// Settings of the Picard backend.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardSettings<T> {
    /// symmetric window `[-L/2, L/2)`; `t = 0` is the middle sample
    pub window: TimeWindow<T>,
    /// existence time `T`
    pub existence_time: T,
    pub s: T,
    pub theta: T,
    pub max_iters: usize,
    pub contraction_tol: T,
    pub pressure_tol: T,
    pub duhamel: DuhamelRule,
}

impl<T: Scalar> PicardSettings<T> {
    pub fn from_config(cfg: &RunConfig) -> Result<Self> {
        let p = &cfg.picard;
        Ok(Self {
            window: TimeWindow::new(T::lit(-p.window / 2.0), T::lit(p.window), p.time_samples)?,
            existence_time: T::lit(cfg.existence_time),
            s: T::lit(cfg.s),
            theta: T::lit(cfg.theta),
            max_iters: p.max_iters,
            contraction_tol: T::lit(p.contraction_tol),
            pressure_tol: T::lit(p.pressure_tol),
            duhamel: p.duhamel,
        })
    }
}

/// A matrix history `G` with its time derivative.
#[derive(Debug, Clone)]
pub struct Iterate<T: Scalar> {
    grid: Grid<T>,
    window: TimeWindow<T>,
    g: Hist<T>,
    gt: Hist<T>,
}

impl<T: Scalar> Iterate<T> {
    fn to_history(&self, h: &Hist<T>, rank: Rank) -> Result<SpaceTimeField<T>> {
        let len = self.grid.len();
        let comps = h
            .iter()
            .map(|c| c.chunks_exact(len).flat_map(|row| self.grid.to_real(row)).collect())
            .collect();
        SpaceTimeField::from_components(&self.grid, self.window, rank, Sampling::Periodic, comps)
    }

    pub fn g(&self) -> Result<SpaceTimeField<T>> {
        self.to_history(&self.g, Rank::Matrix)
    }

    pub fn gt(&self) -> Result<SpaceTimeField<T>> {
        self.to_history(&self.gt, Rank::Matrix)
    }

    /// Slice `k` of `G` as a field.
    pub fn slice(&self, k: usize) -> Result<Field<T>> {
        let len = self.grid.len();
        Field::from_spectra(&self.grid, Rank::Matrix, self.g.iter().map(|c| c[k * len..(k + 1) * len].to_vec()).collect())
    }

    pub fn window(&self) -> &TimeWindow<T> {
        &self.window
    }
}

/// Forcing of one iterate, slice by slice.
struct ForcingHistory<T: Scalar> {
    /// `-f_mat`, untapered
    matrix: Hist<T>,
    /// `-f_vec`, untapered
    vector: Hist<T>,
    /// pressure spectra per slice
    pressure: Vec<Vec<Complex<T>>>,
    iterations: Vec<usize>,
    residuals: Vec<T>,
}

/// Output of one application of the map.
pub struct MapOutput<T: Scalar> {
    pub iterate: Iterate<T>,
    forcing: ForcingHistory<T>,
}

impl<T: Scalar> MapOutput<T> {
    /// Largest pressure residual over the slices.
    pub fn pressure_residual(&self) -> T {
        self.forcing.residuals.iter().fold(T::zero(), |m, &r| m.max(r))
    }
}

/// Converged Picard solution.
#[derive(Debug, Clone)]
pub struct PicardRun<T: Scalar> {
    pub solution: Iterate<T>,
    /// sample indices with `0 <= t <= T`
    pub indices: Vec<usize>,
    pub times: Vec<T>,
    pub u: Vec<Field<T>>,
    pub v: Vec<Field<T>>,
    pub p: Vec<Field<T>>,
    /// `|G_{k+1} - G_k|` in the `bar H^{s,theta}` norm
    pub increments: Vec<T>,
    /// ratios of successive increments
    pub factors: Vec<T>,
    pub iterations: usize,
    pub record: DiagnosticsRecord,
}

pub struct PicardMap<T: Scalar> {
    grid: Grid<T>,
    settings: PicardSettings<T>,
    /// index of `t = 0`
    origin: usize,
    /// free wave of the gradient data
    free: Iterate<T>,
    u0: Vec<Vec<Complex<T>>>,
    v0: Vec<Vec<Complex<T>>>,
    time_fft: StridedFft<T>,
}

fn as_f64<T: Scalar>(v: &[T]) -> Vec<f64> {
    v.iter().map(|x| x.as_f64()).collect()
}

fn zero<T: Scalar>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

fn gradient_spectra<T: Scalar>(grid: &Grid<T>, s: &[Vec<Complex<T>>]) -> Vec<Vec<Complex<T>>> {
    let mut out = Vec::with_capacity(s.len() * grid.dim());
    for c in s {
        for a in 0..grid.dim() {
            out.push(derivative_spectrum(grid, c, a));
        }
    }
    out
}

impl<T: Scalar> PicardMap<T> {
    pub fn new(grid: &Grid<T>, settings: PicardSettings<T>, data: &InitialData<T>) -> Result<Self> {
        grid.check_same(data.u.grid())?;
        grid.check_same(data.v.grid())?;
        let t = settings.existence_time;
        if !(t > T::zero() && t < T::one()) {
            return Err(Error::Parameter(format!("existence time {t} must lie in (0, 1)")));
        }
        let w = settings.window;
        let origin = (0..w.samples)
            .find(|&k| w.time(k) == T::zero())
            .ok_or_else(|| Error::Parameter("the Picard window must contain t = 0 as a sample".into()))?;
        if w.start + w.length < T::lit(1.9) || w.start > -T::lit(1.9) {
            return Err(Error::Parameter("the Picard window must contain the cutoff support [-1.9, 1.9]".into()));
        }
        let g0 = data.u.gradient()?;
        let g1 = data.v.gradient()?;
        let free = Self::free_wave(grid, &w, g0.spectra(), g1.spectra());
        Ok(Self {
            grid: grid.clone(),
            settings,
            origin,
            free,
            u0: data.u.spectra().to_vec(),
            v0: data.v.spectra().to_vec(),
            time_fft: StridedFft::new(w.samples),
        })
    }

    pub fn settings(&self) -> &PicardSettings<T> {
        &self.settings
    }

    fn free_wave(grid: &Grid<T>, w: &TimeWindow<T>, a: &[Vec<Complex<T>>], b: &[Vec<Complex<T>>]) -> Iterate<T> {
        Self::free_wave_at(grid, w, a, b, T::zero())
    }

    /// Free wave sampled at `t_k + offset`.
    fn free_wave_at(grid: &Grid<T>, w: &TimeWindow<T>, a: &[Vec<Complex<T>>], b: &[Vec<Complex<T>>], offset: T) -> Iterate<T> {
        let len = grid.len();
        let m = w.samples;
        let mut g = vec![vec![zero(); m * len]; a.len()];
        let mut gt = vec![vec![zero(); m * len]; a.len()];
        for k in 0..m {
            for c in 0..a.len() {
                let (u, ut) = propagate_spectra(grid, &a[c], &b[c], w.time(k) + offset);
                g[c][k * len..(k + 1) * len].copy_from_slice(&u);
                gt[c][k * len..(k + 1) * len].copy_from_slice(&ut);
            }
        }
        Iterate { grid: grid.clone(), window: *w, g, gt }
    }

    /// Starting iterate `chi(t)` times the free wave of the gradient data.
    pub fn initial_iterate(&self) -> Iterate<T> {
        let len = self.grid.len();
        let w = &self.settings.window;
        let mut out = self.free.clone();
        for k in 0..w.samples {
            let t = w.time(k);
            let (x, dx) = (cutoff_chi(t), cutoff_chi_derivative(t));
            for c in 0..out.g.len() {
                for q in k * len..(k + 1) * len {
                    let (g, gt) = (self.free.g[c][q], self.free.gt[c][q]);
                    out.g[c][q] = g * x;
                    out.gt[c][q] = gt * x + g * dx;
                }
            }
        }
        out
    }

    /// Pressure and forcing of an iterate, warm-started from `warm`.
    fn forcing(&self, it: &Iterate<T>, warm: Option<&[Vec<Complex<T>>]>) -> Result<ForcingHistory<T>> {
        let grid = &self.grid;
        let len = grid.len();
        let m = self.settings.window.samples;
        let dim = grid.dim();
        let mut out = ForcingHistory {
            matrix: vec![vec![zero(); m * len]; dim * dim],
            vector: vec![vec![zero(); m * len]; dim],
            pressure: Vec::with_capacity(m),
            iterations: Vec::with_capacity(m),
            residuals: Vec::with_capacity(m),
        };
        for k in 0..m {
            let r = k * len..(k + 1) * len;
            let g: Vec<Vec<Complex<T>>> = it.g.iter().map(|c| c[r.clone()].to_vec()).collect();
            let gt: Vec<Vec<Complex<T>>> = it.gt.iter().map(|c| c[r.clone()].to_vec()).collect();
            let op = PressureOperator::from_spectra(grid, &g);
            let rhs = op.source_spectrum(&gt);
            let init = warm.map(|w| w[k].as_slice());
            let (p, iters, res, _) = op.solve_spectrum(&rhs, self.settings.pressure_tol, init)?;
            let (fv, fm) = op.forcing_spectra(&p);
            for (dst, src) in out.matrix.iter_mut().zip(&fm) {
                for (d, s) in dst[r.clone()].iter_mut().zip(src) {
                    *d = -*s;
                }
            }
            for (dst, src) in out.vector.iter_mut().zip(&fv) {
                for (d, s) in dst[r.clone()].iter_mut().zip(src) {
                    *d = -*s;
                }
            }
            out.pressure.push(p);
            out.iterations.push(iters);
            out.residuals.push(res);
        }
        Ok(out)
    }

    /// Space-time spectrum of a tapered history held as slice spectra.
    fn tapered_spectra(&self, h: &[Vec<Complex<T>>]) -> Hist<T> {
        let len = self.grid.len();
        let w = &self.settings.window;
        let m = w.samples;
        h.iter()
            .map(|c| {
                let mut buf = c.clone();
                for k in 0..m {
                    let wk = taper(T::usz(k) / T::usz(m));
                    for v in buf[k * len..(k + 1) * len].iter_mut() {
                        *v = *v * wk;
                    }
                }
                self.time_fft.forward(&mut buf, len);
                // the Nyquist bin has no consistent derivative
                for v in buf[(m / 2) * len..(m / 2 + 1) * len].iter_mut() {
                    *v = zero();
                }
                buf
            })
            .collect()
    }

    fn time_inverse(&self, h: &mut Hist<T>) {
        let len = self.grid.len();
        for c in h.iter_mut() {
            self.time_fft.inverse(c, len);
        }
    }

    /// Slice spectra of `int_0^t D^{-1} sin((t - t') D) F(t') dt'` and its
    /// time derivative, from the space-time spectrum of `F`.
    fn duhamel(&self, f: &[Vec<Complex<T>>]) -> (Hist<T>, Hist<T>) {
        match self.settings.duhamel {
            DuhamelRule::Spectral => self.duhamel_spectral(f, T::zero()),
            DuhamelRule::GaussLobatto => self.duhamel_lobatto(f),
        }
    }

    /// Exact Duhamel integral of the trigonometric interpolant of `F`,
    /// sampled at `t_k + offset`.
    fn duhamel_spectral(&self, f: &[Vec<Complex<T>>], offset: T) -> (Hist<T>, Hist<T>) {
        let grid = &self.grid;
        let len = grid.len();
        let w = &self.settings.window;
        let m = w.samples;
        let inv_m = T::one() / T::usz(m);
        let res = T::lit(RESONANCE);
        let times: Vec<T> = w.times().into_iter().map(|t| t + offset).collect();
        let mut u_all = Vec::with_capacity(f.len());
        let mut ut_all = Vec::with_capacity(f.len());
        let delay: Vec<Complex<T>> = (0..m).map(|k| Complex::from_polar(T::one(), w.tau(k) * offset)).collect();
        // e^{-i tau_k s}
        let shift: Vec<Complex<T>> = (0..m).map(|k| Complex::from_polar(T::one(), -w.tau(k) * w.start)).collect();
        for fc in f {
            let mut plus = vec![zero(); m * len];
            let mut minus = vec![zero(); m * len];
            let mut k_plus = vec![zero(); len];
            let mut k_minus = vec![zero(); len];
            let mut r_plus = vec![zero(); len];
            let mut r_minus = vec![zero(); len];
            for k in 0..m {
                if k == m / 2 {
                    continue;
                }
                let tau = w.tau(k);
                for idx in 1..len {
                    let om = grid.xi_norm(idx);
                    let fh = fc[k * len + idx];
                    for (x, buf, kk, rr) in [
                        (tau + om, &mut plus, &mut k_plus, &mut r_plus),
                        (tau - om, &mut minus, &mut k_minus, &mut r_minus),
                    ] {
                        if fabs(x) < res {
                            rr[idx] += fh * shift[k] * inv_m;
                        } else {
                            let v = fh / Complex::new(T::zero(), x);
                            buf[k * len + idx] = v * delay[k];
                            kk[idx] += v * shift[k] * inv_m;
                        }
                    }
                }
            }
            self.time_fft.inverse(&mut plus, len);
            self.time_fft.inverse(&mut minus, len);
            let mut u = vec![zero(); m * len];
            let mut ut = vec![zero(); m * len];
            for (j, &t) in times.iter().enumerate() {
                for idx in 1..len {
                    let om = grid.xi_norm(idx);
                    let (sn, cs) = (om * t).sin_cos();
                    let e = Complex::new(cs, sn);
                    let q = j * len + idx;
                    let ip = e * plus[q] - k_plus[idx] + r_plus[idx] * t;
                    let im = e.conj() * minus[q] - k_minus[idx] + r_minus[idx] * t;
                    let c = (ip + im) * T::lit(0.5);
                    let s = (ip - im) / Complex::new(T::zero(), T::lit(2.0));
                    u[q] = (c * sn - s * cs) / om;
                    ut[q] = c * cs + s * sn;
                }
            }
            // zero spatial frequency: u = int_0^t (t - t') F
            let mut q_at0: Complex<T> = zero();
            let mut dq_at0: Complex<T> = zero();
            let c0 = fc[0] * inv_m;
            for k in 0..m {
                if k == 0 || k == m / 2 {
                    continue;
                }
                let it = Complex::new(T::zero(), w.tau(k));
                q_at0 += fc[k * len] * shift[k] * inv_m / (it * it);
                dq_at0 += fc[k * len] * shift[k] * inv_m / it;
            }
            for (j, &t) in times.iter().enumerate() {
                let mut qv: Complex<T> = zero();
                let mut dqv: Complex<T> = zero();
                for k in 0..m {
                    if k == 0 || k == m / 2 {
                        continue;
                    }
                    let it = Complex::new(T::zero(), w.tau(k));
                    let e = Complex::from_polar(T::one(), w.tau(k) * (t - w.start));
                    qv += fc[k * len] * e * inv_m / (it * it);
                    dqv += fc[k * len] * e * inv_m / it;
                }
                u[j * len] = qv - q_at0 - dq_at0 * t + c0 * (t * t / T::lit(2.0));
                ut[j * len] = dqv - dq_at0 + c0 * t;
            }
            u_all.push(u);
            ut_all.push(ut);
        }
        (u_all, ut_all)
    }

    /// Four-point Gauss-Lobatto quadrature on every sample interval, with
    /// interior nodes from spectral time shifts of `F`.
    fn duhamel_lobatto(&self, f: &[Vec<Complex<T>>]) -> (Hist<T>, Hist<T>) {
        let grid = &self.grid;
        let len = grid.len();
        let w = &self.settings.window;
        let m = w.samples;
        let dt = w.dt();
        let r5 = T::lit(5.0).sqrt().recip();
        let half = T::lit(0.5);
        let nodes = [T::zero(), half * (T::one() - r5), half * (T::one() + r5), T::one()];
        let weights = [T::lit(1.0 / 12.0), T::lit(5.0 / 12.0), T::lit(5.0 / 12.0), T::lit(1.0 / 12.0)];
        let times = w.times();
        let mut u_all = Vec::with_capacity(f.len());
        let mut ut_all = Vec::with_capacity(f.len());
        for fc in f {
            // samples of F at t_k + theta dt for the two interior nodes
            let shifted: Vec<Vec<Complex<T>>> = nodes
                .iter()
                .map(|&th| {
                    let mut buf = fc.clone();
                    for k in 0..m {
                        let e = if k == m / 2 { zero() } else { Complex::from_polar(T::one(), w.tau(k) * th * dt) };
                        for v in buf[k * len..(k + 1) * len].iter_mut() {
                            *v *= e;
                        }
                    }
                    self.time_fft.inverse(&mut buf, len);
                    buf
                })
                .collect();
            let mut u = vec![zero(); m * len];
            let mut ut = vec![zero(); m * len];
            for idx in 0..len {
                let om = grid.xi_norm(idx);
                // running integrals of cos, sin (or 1, t' when om = 0) against F
                let mut acc = vec![(zero(), zero()); m];
                let kern = |t: T| -> (T, T) {
                    if om == T::zero() {
                        (T::one(), t)
                    } else {
                        let (s, c) = (om * t).sin_cos();
                        (c, s)
                    }
                };
                let interval = |j: usize| -> (Complex<T>, Complex<T>) {
                    let mut a = (zero(), zero());
                    for (q, (&th, &wq)) in nodes.iter().zip(&weights).enumerate() {
                        let tq = times[j] + th * dt;
                        let (kc, ks) = kern(tq);
                        let fv = shifted[q][j * len + idx];
                        a.0 += fv * (kc * wq * dt);
                        a.1 += fv * (ks * wq * dt);
                    }
                    a
                };
                for j in self.origin..m - 1 {
                    let d = interval(j);
                    acc[j + 1] = (acc[j].0 + d.0, acc[j].1 + d.1);
                }
                for j in (0..self.origin).rev() {
                    let d = interval(j);
                    acc[j] = (acc[j + 1].0 - d.0, acc[j + 1].1 - d.1);
                }
                for (j, &t) in times.iter().enumerate() {
                    let (c, s) = acc[j];
                    let q = j * len + idx;
                    if om == T::zero() {
                        u[q] = c * t - s;
                        ut[q] = c;
                    } else {
                        let (sn, cs) = (om * t).sin_cos();
                        u[q] = (c * sn - s * cs) / om;
                        ut[q] = c * cs + s * sn;
                    }
                }
            }
            u_all.push(u);
            ut_all.push(ut);
        }
        (u_all, ut_all)
    }

    /// Slice spectra of `chi(t/T) u_1 + u_2 - chi(t) W[c]` and its time
    /// derivative for the untapered forcing `f` (so `G_tt - Delta G = f` on
    /// `[0, T]` with zero data), sampled at `t_k + offset`. A nonzero offset
    /// always uses the spectral Duhamel rule.
    fn inhomogeneous(&self, f: &Hist<T>, offset: T) -> Result<(Hist<T>, Hist<T>)> {
        let mut g = Vec::with_capacity(f.len());
        let mut gt = Vec::with_capacity(f.len());
        // one component at a time bounds the temporaries
        for c in f {
            let (mut a, mut b) = self.inhomogeneous_block(std::slice::from_ref(c), offset)?;
            g.push(a.pop().unwrap_or_default());
            gt.push(b.pop().unwrap_or_default());
        }
        Ok((g, gt))
    }

    fn inhomogeneous_block(&self, f: &[Vec<Complex<T>>], offset: T) -> Result<(Hist<T>, Hist<T>)> {
        let grid = &self.grid;
        let len = grid.len();
        let w = self.settings.window;
        let m = w.samples;
        let t_scale = self.settings.existence_time;
        let spectra = self.tapered_spectra(f);
        let mut near = spectra.clone();
        let mut far = spectra;
        for (nb, fb) in near.iter_mut().zip(far.iter_mut()) {
            for k in 0..m {
                let tau = w.tau(k);
                for idx in 0..len {
                    let wt = near_cone_weight(tau, grid.xi_norm(idx), t_scale);
                    nb[k * len + idx] *= wt;
                    fb[k * len + idx] *= T::one() - wt;
                }
            }
        }
        // G_tt - Delta G = F is box G = -F
        for fb in far.iter_mut() {
            for v in fb.iter_mut() {
                *v = -*v;
            }
        }
        divide_by_box_spectra(grid, &w, &mut far)
            .map_err(|e| Error::Parameter(format!("far-cone forcing reached the cone guard: {e}")))?;
        let mut u2t = far.clone();
        for c in u2t.iter_mut() {
            for k in 0..m {
                let f = Complex::new(T::zero(), w.tau(k));
                for v in c[k * len..(k + 1) * len].iter_mut() {
                    *v *= f;
                }
            }
        }
        let mut u2 = far;
        // data of u_2 at t = 0, from the unshifted samples
        let at_origin = |h: &Hist<T>| -> Vec<Vec<Complex<T>>> {
            h.iter()
                .map(|c| {
                    let mut d = vec![zero(); len];
                    for k in 0..m {
                        let e = Complex::from_polar(T::one(), -w.tau(k) * w.start) / T::usz(m);
                        for (x, y) in d.iter_mut().zip(&c[k * len..(k + 1) * len]) {
                            *x += *y * e;
                        }
                    }
                    d
                })
                .collect()
        };
        let (c0, c1) = (at_origin(&u2), at_origin(&u2t));
        if offset != T::zero() {
            for c in u2.iter_mut().chain(u2t.iter_mut()) {
                for k in 0..m {
                    let e = Complex::from_polar(T::one(), w.tau(k) * offset);
                    for v in c[k * len..(k + 1) * len].iter_mut() {
                        *v *= e;
                    }
                }
            }
        }
        self.time_inverse(&mut u2);
        self.time_inverse(&mut u2t);
        let (u1, u1t) = if offset == T::zero() { self.duhamel(&near) } else { self.duhamel_spectral(&near, offset) };
        let corr = Self::free_wave_at(grid, &w, &c0, &c1, offset);
        let nc = f.len();
        let mut g = vec![vec![zero(); m * len]; nc];
        let mut gt = vec![vec![zero(); m * len]; nc];
        for k in 0..m {
            let t = w.time(k) + offset;
            let (x, dx) = (cutoff_chi(t), cutoff_chi_derivative(t));
            let (y, dy) = (cutoff_chi(t / t_scale), cutoff_chi_derivative(t / t_scale) / t_scale);
            for c in 0..nc {
                for q in k * len..(k + 1) * len {
                    g[c][q] = u1[c][q] * y + u2[c][q] - corr.g[c][q] * x;
                    gt[c][q] = u1[c][q] * dy + u1t[c][q] * y + u2t[c][q] - corr.g[c][q] * dx - corr.gt[c][q] * x;
                }
            }
        }
        Ok((g, gt))
    }

    /// `M G` at `t_k + offset` given the forcing of `G`.
    fn evaluate(&self, forcing: &Hist<T>, offset: T) -> Result<(Hist<T>, Hist<T>)> {
        let len = self.grid.len();
        let w = self.settings.window;
        let (mut g, mut gt) = self.inhomogeneous(forcing, offset)?;
        let shifted;
        let free = if offset == T::zero() {
            &self.free
        } else {
            let g0 = gradient_spectra(&self.grid, &self.u0);
            let g1 = gradient_spectra(&self.grid, &self.v0);
            shifted = Self::free_wave_at(&self.grid, &w, &g0, &g1, offset);
            &shifted
        };
        for k in 0..w.samples {
            let t = w.time(k) + offset;
            let (x, dx) = (cutoff_chi(t), cutoff_chi_derivative(t));
            for c in 0..g.len() {
                for q in k * len..(k + 1) * len {
                    let (f, ft) = (free.g[c][q], free.gt[c][q]);
                    g[c][q] += f * x;
                    gt[c][q] += f * dx + ft * x;
                }
            }
        }
        Ok((g, gt))
    }

    fn apply_with(&self, it: &Iterate<T>, warm: Option<&[Vec<Complex<T>>]>) -> Result<MapOutput<T>> {
        let forcing = self.forcing(it, warm)?;
        let (g, gt) = self.evaluate(&forcing.matrix, T::zero())?;
        Ok(MapOutput { iterate: Iterate { grid: self.grid.clone(), window: self.settings.window, g, gt }, forcing })
    }

    /// One application of the map to `it`.
    pub fn apply(&self, it: &Iterate<T>) -> Result<MapOutput<T>> {
        self.apply_with(it, None)
    }

    /// `|| box(M G) - f_mat[G] ||_{L^2} / || f_mat[G] ||_{L^2}` over the
    /// samples in `[0, T]`. `d_t^2 M G` is an eighth-order central difference
    /// of the exact `d_t M G` evaluated at `t_k +- j h`, `h = dt / 32`.
    pub fn residual(&self, out: &MapOutput<T>) -> Result<T> {
        let grid = &self.grid;
        let len = grid.len();
        let w = &self.settings.window;
        let h = w.dt() / T::lit(32.0);
        let coef = [T::lit(4.0 / 5.0), T::lit(-1.0 / 5.0), T::lit(4.0 / 105.0), T::lit(-1.0 / 280.0)];
        let nc = out.iterate.g.len();
        let mut gtt: Hist<T> = vec![vec![zero(); w.samples * len]; nc];
        for (j, &a) in coef.iter().enumerate() {
            let o = T::usz(j + 1) * h;
            let (_, fwd) = self.evaluate(&out.forcing.matrix, o)?;
            let (_, bwd) = self.evaluate(&out.forcing.matrix, -o)?;
            for c in 0..nc {
                for ((d, p), q) in gtt[c].iter_mut().zip(&fwd[c]).zip(&bwd[c]) {
                    *d += (*p - *q) * (a / h);
                }
            }
        }
        let mut num = T::zero();
        let mut den = T::zero();
        let mut used = 0;
        for k in self.origin..w.samples {
            if w.time(k) > self.settings.existence_time {
                break;
            }
            used += 1;
            for c in 0..nc {
                for idx in 0..len {
                    let q = k * len + idx;
                    let r = grid.xi_norm(idx);
                    // G_tt - Delta G - F
                    let f = out.forcing.matrix[c][q];
                    let res = gtt[c][q] + out.iterate.g[c][q] * (r * r) - f;
                    num += res.norm_sqr();
                    den += f.norm_sqr();
                }
            }
        }
        if used == 0 {
            return Err(Error::Parameter("no samples in [0, T]".into()));
        }
        Ok(if den == T::zero() { num.sqrt() } else { (num / den).sqrt() })
    }

    fn increment(&self, a: &Iterate<T>, b: &Iterate<T>) -> T {
        let diff = |x: &Hist<T>, y: &Hist<T>| -> Hist<T> {
            let len = self.grid.len();
            x.iter()
                .zip(y)
                .map(|(p, q)| {
                    let mut d: Vec<Complex<T>> = p.iter().zip(q).map(|(u, v)| *u - *v).collect();
                    self.time_fft.forward(&mut d, len);
                    d
                })
                .collect()
        };
        let (s, th) = (self.settings.s, self.settings.theta);
        let w = &self.settings.window;
        let dg = diff(&a.g, &b.g);
        let dgt = diff(&a.gt, &b.gt);
        // slice spectra carry no spatial normalization beyond the grid FFT,
        // which matches the space-time weighting
        space_time_weighted_spectra(&self.grid, w, &dg, hst_weight(s, th)).sqrt()
            + space_time_weighted_spectra(&self.grid, w, &dgt, hst_weight(s - T::one(), th)).sqrt()
    }

    /// Iterates the map from [`initial_iterate`](Self::initial_iterate) and
    /// recovers `U` from the last pressure.
    pub fn solve(&self) -> Result<PicardRun<T>> {
        let mut current = self.initial_iterate();
        let mut warm: Option<Vec<Vec<Complex<T>>>> = None;
        let mut increments: Vec<T> = Vec::new();
        let mut factors: Vec<T> = Vec::new();
        let mut streak = 0;
        let mut iterations = 0;
        let tol = self.settings.contraction_tol;
        let last = loop {
            if iterations >= self.settings.max_iters {
                return Err(Error::PicardNotConverged { iterations });
            }
            let out = match self.apply_with(&current, warm.as_deref()) {
                Ok(out) => out,
                // the pressure series only converges for small G: the iterate left the working ball
                Err(e @ (Error::PressureDivergence { .. } | Error::PressureNotConverged { .. })) => {
                    return Err(Error::NonContraction { factors: as_f64(&factors), reason: format!("iterate {iterations}: {e}") });
                }
                Err(e) => return Err(e),
            };
            iterations += 1;
            let inc = self.increment(&out.iterate, &current);
            if !inc.is_finite() {
                return Err(Error::NonContraction { factors: as_f64(&factors), reason: "non-finite increment".into() });
            }
            if let Some(&prev) = increments.last() {
                let f = if prev > T::zero() { inc / prev } else { T::zero() };
                factors.push(f);
                if f >= T::one() {
                    streak += 1;
                    if streak >= 3 {
                        return Err(Error::NonContraction {
                            factors: as_f64(&factors),
                            reason: "three consecutive factors >= 1".into(),
                        });
                    }
                } else {
                    streak = 0;
                }
            }
            increments.push(inc);
            warm = Some(out.forcing.pressure.clone());
            let done = inc <= tol * increments[0];
            current = out.iterate.clone();
            if done {
                break out;
            }
        };
        self.finish(last, increments, factors, iterations)
    }

    /// Samples of the solution on `[0, T]`, `U` from the Duhamel formula with
    /// the converged vector forcing, and the diagnostics record.
    fn finish(&self, out: MapOutput<T>, increments: Vec<T>, factors: Vec<T>, iterations: usize) -> Result<PicardRun<T>> {
        let grid = &self.grid;
        let len = grid.len();
        let w = self.settings.window;
        let spectra = self.tapered_spectra(&out.forcing.vector);
        let (du, dut) = self.duhamel(&spectra);
        let free_u = Self::free_wave(grid, &w, &self.u0, &self.v0);
        let indices: Vec<usize> =
            (self.origin..w.samples).take_while(|&k| w.time(k) <= self.settings.existence_time).collect();
        let times: Vec<T> = indices.iter().map(|&k| w.time(k)).collect();
        let slice = |h: &Hist<T>, k: usize| -> Vec<Vec<Complex<T>>> { h.iter().map(|c| c[k * len..(k + 1) * len].to_vec()).collect() };
        let mut u = Vec::with_capacity(indices.len());
        let mut v = Vec::with_capacity(indices.len());
        let mut p = Vec::with_capacity(indices.len());
        let mut record = DiagnosticsRecord::new(grid.dim(), self.settings.s.as_f64());
        record.picard_factors = factors.iter().map(|f| f.as_f64()).collect();
        let q = strichartz_exponent(grid.dim());
        let mut acc = [0.0f64; 2];
        let mut prev: Option<(f64, f64, f64)> = None;
        let s = self.settings.s;
        for &k in &indices {
            let add = |a: Vec<Vec<Complex<T>>>, b: Vec<Vec<Complex<T>>>| -> Vec<Vec<Complex<T>>> {
                a.into_iter().zip(b).map(|(x, y)| x.into_iter().zip(y).map(|(p, q)| p + q).collect()).collect()
            };
            let us = add(slice(&free_u.g, k), slice(&du, k));
            let vs = add(slice(&free_u.gt, k), slice(&dut, k));
            let uf = Field::from_spectra(grid, Rank::Vector, us)?;
            let vf = Field::from_spectra(grid, Rank::Vector, vs.clone())?;
            let gf = Field::from_spectra(grid, Rank::Matrix, slice(&out.iterate.g, k))?;
            let gtf = Field::from_spectra(grid, Rank::Matrix, slice(&out.iterate.gt, k))?;
            let pf = Field::from_spectra(grid, Rank::Scalar, vec![out.forcing.pressure[k].clone()])?;
            // d_t V = Delta U - f_vec
            let mut dv = slice(&out.forcing.vector, k);
            for (c, uc) in dv.iter_mut().zip(uf.spectra()) {
                for (idx, (d, x)) in c.iter_mut().zip(uc).enumerate() {
                    let r = grid.xi_norm(idx);
                    *d -= *x * (r * r);
                }
            }
            let dv_inf = dv.iter().flat_map(|c| grid.to_real(c)).fold(T::zero(), |m, x| m.max(fabs(x)));
            let grad_g = gradient_spectra(grid, gf.spectra());
            let df_inf = gtf.max_abs() + grad_g.iter().flat_map(|c| grid.to_real(c)).fold(T::zero(), |m, x| m.max(fabs(x)));
            let rel = |a: &Field<T>, b: &Field<T>| -> Result<T> {
                let d = a.sub(b)?.max_abs();
                let m = a.max_abs().max(b.max_abs());
                Ok(if m > T::zero() { d / m } else { d })
            };
            let compat = rel(&gf, &uf.gradient()?)?.max(rel(&gtf, &vf.gradient()?)?);
            let t = w.time(k).as_f64();
            let (dfv, dvv) = (df_inf.as_f64(), dv_inf.as_f64());
            if let Some((t0, a0, b0)) = prev {
                let h = t - t0;
                acc[0] += 0.5 * h * (a0.powf(q) + dfv.powf(q));
                acc[1] += 0.5 * h * (b0.powf(q) + dvv.powf(q));
            }
            prev = Some((t, dfv, dvv));
            record.push(DiagnosticsRow {
                t,
                u_norm: sobolev_norm(&uf, s + T::one()).as_f64(),
                v_norm: sobolev_norm(&vf, s).as_f64(),
                g_norm: sobolev_norm(&gf, s).as_f64(),
                gt_norm: sobolev_norm(&gtf, s - T::one()).as_f64(),
                det_drift: det_drift(&identity_plus(&gf)?)?.as_f64(),
                pressure_residual: out.forcing.residuals[k].as_f64(),
                pressure_iterations: out.forcing.iterations[k],
                compatibility: compat.as_f64(),
                df_inf: dfv,
                dv_inf: dvv,
                strichartz_df: acc[0].powf(1.0 / q),
                strichartz_dv: acc[1].powf(1.0 / q),
            })?;
            u.push(uf);
            v.push(vf);
            p.push(pf);
        }
        Ok(PicardRun { solution: out.iterate, indices, times, u, v, p, increments, factors, iterations, record })
    }
}
