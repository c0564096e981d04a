//! Pseudospectral simulation and verification toolkit for incompressible
//! neo-Hookean elastodynamics written in Lagrangian coordinates.
//!
//! The kernels are generic over the floating point type through [`Scalar`];
//! the `*64` and `*32` aliases below fix it.

pub mod coords;
pub mod elasticity;
pub mod error;
pub mod scalar;
pub mod norms;
pub mod nullforms;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Grid64 = spectral::Grid<f64>;
pub type Field64 = spectral::Field<f64>;
pub type SpaceTimeField64 = spectral::SpaceTimeField<f64>;

pub type Grid32 = spectral::Grid<f32>;
pub type Field32 = spectral::Field<f32>;
pub type SpaceTimeField32 = spectral::SpaceTimeField<f32>;
