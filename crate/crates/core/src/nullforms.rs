//! The classical null forms and numerical probes of the bilinear and product
//! estimates in `H^{s,theta}`.
//!
//! Products are taken slice by slice on the 3/2-padded lattice, so quadratic
//! terms never alias into the retained band. Time derivatives are spectral
//! on the window, so inputs must be tapered or periodic.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::norms::{bar_norm, hst_norm};
use crate::spectral::{
    derivative_spectrum, free_wave_history, lambda_op, Field, Grid, Rank, Sampling, SpaceTimeField, TimeWindow,
};
use crate::Scalar;

/// Which null form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NullForm {
    /// `d_t f d_t g - grad f . grad g`
    Q0,
    /// `d_i f d_j g - d_j f d_i g`
    Qij(usize, usize),
    /// `d_t f d_j g - d_j f d_t g`
    Q0j(usize),
}

impl NullForm {
    fn check(self, dim: usize) -> Result<()> {
        let bad = match self {
            NullForm::Q0 => false,
            NullForm::Qij(i, j) => i >= dim || j >= dim,
            NullForm::Q0j(j) => j >= dim,
        };
        if bad {
            return Err(Error::Parameter(format!("{self:?} has an index outside dimension {dim}")));
        }
        Ok(())
    }
}

fn check_scalar<T: Scalar>(f: &SpaceTimeField<T>) -> Result<()> {
    if f.rank() != Rank::Scalar {
        return Err(Error::Rank { expected: "scalar history".into(), found: f.rank().to_string() });
    }
    Ok(())
}

fn product_sampling(a: Sampling, b: Sampling) -> Sampling {
    match (a, b) {
        (Sampling::Raw, _) | (_, Sampling::Raw) => Sampling::Raw,
        (Sampling::Periodic, Sampling::Periodic) => Sampling::Periodic,
        _ => Sampling::Tapered,
    }
}

/// A derivative of a scalar history: `None` is the function itself,
/// `Some(a)` the spatial derivative along `a`, `Some(usize::MAX)` the time
/// derivative.
type Slot = Option<usize>;
const TIME: Slot = Some(usize::MAX);

/// `sum_k c_k D_k f D'_k g` slice by slice, dealiased.
fn bilinear<T: Scalar>(
    f: &SpaceTimeField<T>,
    g: &SpaceTimeField<T>,
    terms: &[(T, Slot, Slot)],
) -> Result<SpaceTimeField<T>> {
    check_scalar(f)?;
    check_scalar(g)?;
    f.check_compatible(g)?;
    let needs_time = terms.iter().any(|&(_, a, b)| a == TIME || b == TIME);
    let (ft, gt) = if needs_time { (Some(f.time_derivative()?), Some(g.time_derivative()?)) } else { (None, None) };
    let grid = f.grid();
    let len = grid.len();
    let m = f.window().samples;
    let mut out = vec![T::zero(); len * m];
    for k in 0..m {
        let r = k * len..(k + 1) * len;
        let spec = |h: &SpaceTimeField<T>| grid.to_spectrum(&h.components()[0][r.clone()]);
        let (fs, gs) = (spec(f), spec(g));
        let (fts, gts) = (ft.as_ref().map(spec), gt.as_ref().map(spec));
        let fine = |base: &[Complex<T>], ts: &Option<Vec<Complex<T>>>, slot: Slot| -> Vec<T> {
            match slot {
                None => grid.to_fine(base),
                s if s == TIME => grid.to_fine(ts.as_ref().expect("time derivative requested")),
                Some(a) => grid.to_fine(&derivative_spectrum(grid, base, a)),
            }
        };
        let mut acc = vec![T::zero(); grid.fine_len()];
        for &(c, a, b) in terms {
            let x = fine(&fs, &fts, a);
            let y = fine(&gs, &gts, b);
            for ((o, p), q) in acc.iter_mut().zip(&x).zip(&y) {
                *o += c * *p * *q;
            }
        }
        out[r].copy_from_slice(&grid.to_real(&grid.from_fine(&acc)));
    }
    SpaceTimeField::from_components(
        grid,
        *f.window(),
        Rank::Scalar,
        product_sampling(f.sampling(), g.sampling()),
        vec![out],
    )
}

/// Evaluates `kind` on two scalar histories.
pub fn null_form<T: Scalar>(kind: NullForm, f: &SpaceTimeField<T>, g: &SpaceTimeField<T>) -> Result<SpaceTimeField<T>> {
    let dim = f.grid().dim();
    kind.check(dim)?;
    let one = T::one();
    let terms: Vec<(T, Slot, Slot)> = match kind {
        NullForm::Q0 => {
            let mut t = vec![(one, TIME, TIME)];
            t.extend((0..dim).map(|a| (-one, Some(a), Some(a))));
            t
        }
        NullForm::Qij(i, j) => vec![(one, Some(i), Some(j)), (-one, Some(j), Some(i))],
        NullForm::Q0j(j) => vec![(one, TIME, Some(j)), (-one, Some(j), TIME)],
    };
    bilinear(f, g, &terms)
}

/// The generic quadratic term `d_t f d_t g` the null form is compared with.
pub fn generic_form<T: Scalar>(f: &SpaceTimeField<T>, g: &SpaceTimeField<T>) -> Result<SpaceTimeField<T>> {
    bilinear(f, g, &[(T::one(), TIME, TIME)])
}

/// Dealiased pointwise product of two scalar histories.
pub fn product<T: Scalar>(f: &SpaceTimeField<T>, g: &SpaceTimeField<T>) -> Result<SpaceTimeField<T>> {
    bilinear(f, g, &[(T::one(), None, None)])
}

/// Free-wave families for the bilinear probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ensemble {
    /// Gaussian coefficients on the annulus `lambda <= |xi| <= 2 lambda` with
    /// equal `+` and `-` cone parts
    Annulus,
    /// coherent forward packets on a sector of angular width `lambda^{-1/2}`
    /// around a random direction shared by both inputs
    Packet,
}

/// Parameters of [`bilinear_probe`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BilinearProbeConfig {
    pub dim: usize,
    /// frequency scale in units of the lattice spacing `2 pi / L`
    pub scale: usize,
    pub s: f64,
    pub theta: f64,
    pub epsilon: f64,
    pub samples: usize,
    pub ensemble: Ensemble,
    pub seed: u64,
}

/// Ratios of the bilinear estimate over an ensemble at one frequency scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BilinearProbeReport {
    /// `lambda` in units of `2 pi / L`
    pub frequency_scale: f64,
    /// max over samples of `||Q_0(h, w)||_{s-1, theta+eps-1} / (|h|_{s,theta} |w|_{s,theta})`
    pub ratio_null: f64,
    /// the same with `Q_0` replaced by `d_t h d_t w`
    pub ratio_generic: f64,
    pub mean_null: f64,
    pub mean_generic: f64,
    pub dim: usize,
    pub s: f64,
    pub theta: f64,
    pub epsilon: f64,
    pub samples: usize,
    pub ensemble: Ensemble,
    /// `epsilon = 1 - theta`, where the estimate rests on a different argument
    pub endpoint: bool,
    pub points_per_axis: usize,
    pub time_samples: usize,
}

/// Checks the hypotheses of the bilinear estimate, naming the violated one.
pub fn check_bilinear_hypotheses(dim: usize, s: f64, theta: f64, epsilon: f64) -> Result<()> {
    let n = dim as f64;
    if dim < 2 {
        return Err(Error::Parameter(format!("n = {dim} violates n >= 2")));
    }
    if !(s > n / 2.0) {
        return Err(Error::Parameter(format!("s = {s} violates s > n/2 = {}", n / 2.0)));
    }
    if !(theta > 0.5 && theta < 1.0) {
        return Err(Error::Parameter(format!("theta = {theta} violates 1/2 < theta < 1")));
    }
    if !(epsilon > 0.0 && epsilon <= 1.0 - theta + 1e-12) {
        return Err(Error::Parameter(format!("epsilon = {epsilon} violates 0 < epsilon <= 1 - theta")));
    }
    if !((n - 1.0) / 2.0 + theta + epsilon < s) {
        return Err(Error::Parameter(format!(
            "s = {s} violates (n-1)/2 + theta + epsilon < s, with (n-1)/2 + theta + epsilon = {}",
            (n - 1.0) / 2.0 + theta + epsilon
        )));
    }
    Ok(())
}

/// `(null, generic)` ratios for one pair of tapered free waves; zero when a
/// denominator vanishes.
pub fn bilinear_ratios<T: Scalar>(
    h: &SpaceTimeField<T>,
    w: &SpaceTimeField<T>,
    s: T,
    theta: T,
    epsilon: T,
) -> Result<(T, T)> {
    let den = bar_norm(h, s, theta)? * bar_norm(w, s, theta)?;
    if den == T::zero() {
        return Ok((T::zero(), T::zero()));
    }
    let (a, b) = (s - T::one(), theta + epsilon - T::one());
    let null = hst_norm(&null_form(NullForm::Q0, h, w)?, a, b)?;
    let generic = hst_norm(&generic_form(h, w)?, a, b)?;
    Ok((null / den, generic / den))
}

/// Lattice and window sized so that products of the annulus stay resolved:
/// `8 lambda` points per axis on `[0, 2 pi)`, a window of length `pi` with
/// at least `5 lambda` samples.
pub fn probe_grid<T: Scalar>(dim: usize, scale: usize) -> Result<(Grid<T>, TimeWindow<T>)> {
    let n = (8 * scale).next_power_of_two().max(16);
    let grid = Grid::new(dim, n, T::two_pi())?;
    let m = (5 * scale).max(16);
    let m = m + m % 2;
    let window = TimeWindow::new(T::zero(), T::two_pi() / T::lit(2.0), m)?;
    Ok((grid, window))
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Real spectrum with the given coefficients on `support` (one
/// representative per conjugate pair is drawn).
fn hermitian<T: Scalar>(grid: &Grid<T>, mut coef: impl FnMut(usize) -> Option<Complex<f64>>) -> Vec<Complex<T>> {
    let len = grid.len();
    let mut spec = vec![Complex::new(T::zero(), T::zero()); len];
    for idx in 0..len {
        let cj = grid.conjugate_index(idx);
        if cj < idx || grid.is_nyquist(idx) {
            continue;
        }
        if let Some(c) = coef(idx) {
            let c = if cj == idx { Complex::new(c.re, 0.0) } else { c };
            spec[idx] = Complex::new(T::lit(c.re), T::lit(c.im));
            spec[cj] = Complex::new(T::lit(c.re), T::lit(-c.im));
        }
    }
    spec
}

/// Data `(f, g)` of one free wave of the ensemble.
fn ensemble_data<T: Scalar>(
    grid: &Grid<T>,
    ensemble: Ensemble,
    scale: usize,
    direction: &[f64],
    rng: &mut ChaCha8Rng,
) -> Result<(Field<T>, Field<T>)> {
    let lam = scale as f64 * grid.unit_wavenumber().as_f64();
    let dim = grid.dim();
    let len = grid.len();
    let xi = |idx: usize| -> Vec<f64> { (0..dim).map(|a| grid.xi(idx, a).as_f64()).collect() };
    let (f, g) = match ensemble {
        Ensemble::Annulus => {
            let inside = |idx: usize| {
                let r = grid.xi_norm(idx).as_f64();
                r >= lam && r <= 2.0 * lam
            };
            let mut cf = Vec::with_capacity(len);
            for idx in 0..len {
                cf.push(if inside(idx) {
                    let r = grid.xi_norm(idx).as_f64();
                    // f and g / |xi| independent: the two cone parts carry equal energy
                    Some([
                        Complex::new(gaussian(rng), gaussian(rng)),
                        Complex::new(gaussian(rng), gaussian(rng)) * r,
                    ])
                } else {
                    None
                });
            }
            (hermitian(grid, |i| cf[i].map(|c| c[0])), hermitian(grid, |i| cf[i].map(|c| c[1])))
        }
        Ensemble::Packet => {
            let half_angle = (scale as f64).powf(-0.5);
            let centre = grid.period().as_f64() / 2.0;
            let mut cf: Vec<Option<Complex<f64>>> = vec![None; len];
            for (idx, slot) in cf.iter_mut().enumerate() {
                let k = xi(idx);
                let r = grid.xi_norm(idx).as_f64();
                if !(r >= lam && r <= 2.0 * lam) {
                    continue;
                }
                let cos = k.iter().zip(direction).map(|(a, b)| a * b).sum::<f64>() / r;
                if cos.abs() < half_angle.cos() {
                    continue;
                }
                let env = (-((r - 1.5 * lam) / (0.5 * lam)).powi(2)).exp() * (1.0 + 0.2 * gaussian(rng));
                // forward packet centred in the box: e^{i xi (y - c) - i |xi| t}
                let phase = -k.iter().sum::<f64>() * centre;
                let c = Complex::from_polar(env, phase);
                *slot = Some(if cos > 0.0 { c } else { c.conj() });
            }
            let f = hermitian(grid, |i| cf[i]);
            // g = -i |xi| f on the forward sector, conjugate on its mirror
            let g = hermitian(grid, |i| {
                cf[i].map(|c| {
                    let r = grid.xi_norm(i).as_f64();
                    let k = xi(i);
                    let s = if k.iter().zip(direction).map(|(a, b)| a * b).sum::<f64>() > 0.0 { 1.0 } else { -1.0 };
                    c * Complex::new(0.0, -s * r)
                })
            });
            (f, g)
        }
    };
    Ok((Field::from_spectra(grid, Rank::Scalar, vec![f])?, Field::from_spectra(grid, Rank::Scalar, vec![g])?))
}

fn random_direction(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| gaussian(rng)).collect();
        let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if r > 1e-3 {
            return v.into_iter().map(|x| x / r).collect();
        }
    }
}

/// Draws `samples` pairs of free waves at frequency scale `lambda`, tapers
/// them on the window and measures both ratios.
pub fn bilinear_probe<T: Scalar>(cfg: &BilinearProbeConfig) -> Result<BilinearProbeReport> {
    check_bilinear_hypotheses(cfg.dim, cfg.s, cfg.theta, cfg.epsilon)?;
    if cfg.samples == 0 || cfg.scale == 0 {
        return Err(Error::Parameter("bilinear probe needs samples >= 1 and scale >= 1".into()));
    }
    let (grid, window) = probe_grid::<T>(cfg.dim, cfg.scale)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (s, th, ep) = (T::lit(cfg.s), T::lit(cfg.theta), T::lit(cfg.epsilon));
    let mut nulls = Vec::with_capacity(cfg.samples);
    let mut generics = Vec::with_capacity(cfg.samples);
    for _ in 0..cfg.samples {
        let dir = random_direction(cfg.dim, &mut rng);
        let mut wave = || -> Result<SpaceTimeField<T>> {
            let (f, g) = ensemble_data(&grid, cfg.ensemble, cfg.scale, &dir, &mut rng)?;
            Ok(free_wave_history(&f, &g, window)?.0.tapered())
        };
        let h = wave()?;
        let w = wave()?;
        let (a, b) = bilinear_ratios(&h, &w, s, th, ep)?;
        nulls.push(a.as_f64());
        generics.push(b.as_f64());
    }
    let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Ok(BilinearProbeReport {
        frequency_scale: cfg.scale as f64,
        ratio_null: max(&nulls),
        ratio_generic: max(&generics),
        mean_null: mean(&nulls),
        mean_generic: mean(&generics),
        dim: cfg.dim,
        s: cfg.s,
        theta: cfg.theta,
        epsilon: cfg.epsilon,
        samples: cfg.samples,
        ensemble: cfg.ensemble,
        endpoint: (cfg.epsilon - (1.0 - cfg.theta)).abs() < 1e-12,
        points_per_axis: grid.points_per_axis(),
        time_samples: window.samples,
    })
}

/// The product estimates probed by [`product_probe`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProductEstimate {
    /// `||f1 f2||_{s-1, th+eps-1} <= C ||f1||_{s-1, th} ||f2||_{s, th+eps-1}`
    LowRegularity { s: f64, theta: f64, epsilon: f64 },
    /// `||f1 f2||_{s, th+eps-1} <= C ||f1||_{s, th} ||f2||_{s, th+eps-1}`
    Algebra { s: f64, theta: f64, epsilon: f64 },
    /// `||f1 f2||_{-s1, -th1} <= C ||f1||_{s2, th2} ||f2||_{s3, th3}`
    General { s: [f64; 3], theta: [f64; 3] },
}

impl ProductEstimate {
    /// `(output, f1, f2)` exponent pairs `(s, theta)`.
    pub fn exponents(&self) -> [(f64, f64); 3] {
        match *self {
            ProductEstimate::LowRegularity { s, theta, epsilon } => {
                [(s - 1.0, theta + epsilon - 1.0), (s - 1.0, theta), (s, theta + epsilon - 1.0)]
            }
            ProductEstimate::Algebra { s, theta, epsilon } => {
                [(s, theta + epsilon - 1.0), (s, theta), (s, theta + epsilon - 1.0)]
            }
            ProductEstimate::General { s, theta } => [(-s[0], -theta[0]), (s[1], theta[1]), (s[2], theta[2])],
        }
    }

    /// Checks the stated exponent constraints in dimension `dim`.
    pub fn check(&self, dim: usize) -> Result<()> {
        let n = dim as f64;
        match *self {
            ProductEstimate::LowRegularity { s, theta, epsilon } | ProductEstimate::Algebra { s, theta, epsilon } => {
                if !(s > n / 2.0) {
                    return Err(Error::Parameter(format!("s = {s} violates s > n/2 = {}", n / 2.0)));
                }
                if !(theta > 0.5 && theta < 1.0) {
                    return Err(Error::Parameter(format!("theta = {theta} violates 1/2 < theta < 1")));
                }
                if !(epsilon > 0.0 && epsilon <= 1.0 - theta + 1e-12) {
                    return Err(Error::Parameter(format!("epsilon = {epsilon} violates 0 < epsilon <= 1 - theta")));
                }
            }
            ProductEstimate::General { s, theta } => {
                if s.iter().chain(&theta).any(|&x| !(x >= 0.0)) {
                    return Err(Error::Parameter("general product estimate needs every s_j, theta_j >= 0".into()));
                }
                if !(s.iter().sum::<f64>() > n / 2.0) {
                    return Err(Error::Parameter(format!("s_1 + s_2 + s_3 violates > n/2 = {}", n / 2.0)));
                }
                if !(theta.iter().sum::<f64>() > 0.5) {
                    return Err(Error::Parameter("theta_1 + theta_2 + theta_3 violates > 1/2".into()));
                }
            }
        }
        Ok(())
    }
}

/// `||f1 f2|| / (||f1|| ||f2||)` in the norms of `estimate`; zero when a
/// denominator vanishes.
pub fn product_ratio<T: Scalar>(estimate: &ProductEstimate, f1: &SpaceTimeField<T>, f2: &SpaceTimeField<T>) -> Result<T> {
    let [(s0, t0), (s1, t1), (s2, t2)] = estimate.exponents();
    let den = hst_norm(f1, T::lit(s1), T::lit(t1))? * hst_norm(f2, T::lit(s2), T::lit(t2))?;
    if den == T::zero() {
        return Ok(T::zero());
    }
    Ok(hst_norm(&product(f1, f2)?, T::lit(s0), T::lit(t0))? / den)
}

/// Empirical constants of a product estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductProbeReport {
    pub estimate: ProductEstimate,
    pub dim: usize,
    pub samples: usize,
    pub max_ratio: f64,
    pub ratios: Vec<f64>,
}

/// Tapered history with a few random lattice modes up to `kmax`.
pub fn random_history<T: Scalar>(grid: &Grid<T>, window: TimeWindow<T>, kmax: i64, rng: &mut ChaCha8Rng) -> SpaceTimeField<T> {
    let dim = grid.dim();
    let unit = grid.unit_wavenumber().as_f64();
    let tau_unit = std::f64::consts::TAU / window.length.as_f64();
    let tmax = (window.samples / 4) as i64;
    let modes: Vec<(Vec<f64>, f64, f64, f64)> = (0..8)
        .map(|_| {
            let k: Vec<f64> = (0..dim).map(|_| rng.random_range(-kmax..=kmax) as f64 * unit).collect();
            let tau = rng.random_range(-tmax..=tmax) as f64 * tau_unit;
            let r = k.iter().map(|x| x * x).sum::<f64>().sqrt();
            (k, tau, gaussian(rng) / (1.0 + r), rng.random_range(0.0..std::f64::consts::TAU))
        })
        .collect();
    SpaceTimeField::from_fn(grid, window, Rank::Scalar, Sampling::Periodic, |t, y| {
        let (t, y): (f64, Vec<f64>) = (t.as_f64(), y.iter().map(|v| v.as_f64()).collect());
        let v: f64 = modes
            .iter()
            .map(|(k, tau, a, ph)| a * (tau * t + k.iter().zip(&y).map(|(p, q)| p * q).sum::<f64>() + ph).cos())
            .sum();
        vec![T::lit(v)]
    })
    .tapered()
}

/// Maximum of [`product_ratio`] over `samples` random tapered pairs on `grid`.
pub fn product_probe<T: Scalar>(
    estimate: ProductEstimate,
    grid: &Grid<T>,
    window: TimeWindow<T>,
    samples: usize,
    seed: u64,
) -> Result<ProductProbeReport> {
    estimate.check(grid.dim())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // products must stay inside the dealiased band
    let kmax = (grid.points_per_axis() / 4) as i64 - 1;
    let mut ratios = Vec::with_capacity(samples);
    for _ in 0..samples {
        let f1 = random_history(grid, window, kmax, &mut rng);
        let f2 = random_history(grid, window, kmax, &mut rng);
        ratios.push(product_ratio(&estimate, &f1, &f2)?.as_f64());
    }
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    Ok(ProductProbeReport { estimate, dim: grid.dim(), samples, max_ratio, ratios })
}

/// `||Lambda^a (f g)||_{L^2} / (||Lambda^a f . g||_{L^2} + ||Lambda^a g . f||_{L^2})`
/// for scalar fields, products dealiased.
pub fn leibniz_ratio<T: Scalar>(a: T, f: &Field<T>, g: &Field<T>) -> Result<T> {
    let grid = f.grid();
    let mul = |x: &Field<T>, y: &Field<T>| -> Result<Field<T>> {
        let p = grid.dealiased_product(&x.spectra()[0], &y.spectra()[0]);
        Field::from_spectra(grid, Rank::Scalar, vec![p])
    };
    let lhs = lambda_op(&mul(f, g)?, a)?.l2_norm();
    let rhs = mul(&lambda_op(f, a)?, g)?.l2_norm() + mul(&lambda_op(g, a)?, f)?.l2_norm();
    Ok(if rhs == T::zero() { T::zero() } else { lhs / rhs })
}

/// Largest [`leibniz_ratio`] over random band-limited pairs.
pub fn leibniz_constant<T: Scalar>(grid: &Grid<T>, a: T, samples: usize, seed: u64) -> Result<T> {
    if !(a > T::zero()) {
        return Err(Error::Parameter(format!("Leibniz exponent {a} must be positive")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kmax = grid.points_per_axis() as f64 / 4.0 * grid.unit_wavenumber().as_f64();
    let mut worst = T::zero();
    for _ in 0..samples {
        let mut field = || -> Result<Field<T>> {
            let spec = hermitian(grid, |idx| {
                let r = grid.xi_norm(idx).as_f64();
                (r <= kmax).then(|| Complex::new(gaussian(&mut rng), gaussian(&mut rng)) / (1.0 + r))
            });
            Field::from_spectra(grid, Rank::Scalar, vec![spec])
        };
        let (f, g) = (field()?, field()?);
        worst = worst.max(leibniz_ratio(a, &f, &g)?);
    }
    Ok(worst)
}
