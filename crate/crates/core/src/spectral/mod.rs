//! Periodic grids, transforms, Fourier multipliers, cutoffs and the free
//! wave propagator.

pub mod cutoff;
mod fft;
mod field;
mod grid;
pub mod multiplier;
mod propagator;
mod spacetime;

pub use cutoff::{apply_box, box_inverse, cone_split, cutoff_chi, cutoff_chi_derivative, cutoff_phi, divide_by_box};
pub(crate) use field::derivative_spectrum;
pub use field::{Field, Rank};
pub(crate) use fft::StridedFft;
pub use grid::Grid;
pub use multiplier::{apply_multiplier, apply_spacetime_multiplier, bracket, d_op, lambda_op, lambda_pm, ConeSign, ZeroMode};
pub(crate) use propagator::propagate_spectra;
pub use propagator::{free_wave_history, wave_energy, wave_propagator};
pub use spacetime::{Sampling, SpaceTimeField, TimeWindow};
