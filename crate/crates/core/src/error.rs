use thiserror::Error;

/// Errors raised by the kernels, solvers and diagnostics.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid or window mismatch: {0}")]
    Mismatch(String),

    #[error("field rank mismatch: expected {expected}, found {found}")]
    Rank { expected: String, found: String },

    #[error("symbol is not finite at frequency {frequency:?}")]
    NonFiniteSymbol { frequency: Vec<f64> },

    #[error("negative power of D applied to a field with nonzero mean {mean:e}; request zero-mean projection")]
    NonzeroMean { mean: f64 },

    #[error("time-Fourier transform of an untapered history (would alias in tau)")]
    NotTapered,

    #[error("coefficient at tau = {tau}, |xi| = {xi} lies within the cone guard")]
    ConeProximity { tau: f64, xi: f64 },

    #[error("parameter out of range: {0}")]
    Parameter(String),

    #[error("pressure iteration diverged after {iterations} iterations (|G|_inf = {g_inf:e}); data outside the perturbative regime")]
    PressureDivergence { iterations: usize, g_inf: f64 },

    #[error("pressure iteration reached the cap of {iterations} iterations with relative residual {residual:e}")]
    PressureNotConverged { iterations: usize, residual: f64 },

    #[error("Picard map is not contracting ({reason}; factors {factors:?}); reduce T or the data size")]
    NonContraction { factors: Vec<f64>, reason: String },

    #[error("Picard iteration reached {iterations} iterations without meeting the contraction tolerance")]
    PicardNotConverged { iterations: usize },

    #[error("inverse map fixed point did not converge (|grad U|_inf = {grad_inf:e})")]
    MapNotInvertible { grad_inf: f64 },

    #[error("implicit midpoint stage did not converge in {iterations} iterations at t = {t} (last change {change:e})")]
    ImplicitNotConverged { t: f64, iterations: usize, change: f64 },

    #[error("non-finite value detected at t = {t}")]
    NonFinite { t: f64 },

    #[error("det F drift {drift:e} exceeds the budget {budget:e} at t = {t}")]
    ConstraintViolation { t: f64, drift: f64, budget: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
