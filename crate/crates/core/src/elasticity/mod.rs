//! Deformation gradient algebra, the pressure equation and the forcing of
//! the wave system.

pub mod algebra;
pub mod pressure;
mod state;

pub use algebra::{cofactor_inverse, det_drift, det_drift_subsampled, determinant, identity_plus, matmul, max_frobenius};
pub(crate) use pressure::Spectra;
pub use pressure::{PressureOperator, PressureSolution, PRESSURE_MAX_ITERATIONS};
pub use state::{forcing_hessian_route, forcing_term, gradient_state, DeformationState, Forcing};
