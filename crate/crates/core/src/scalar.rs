//! Floating point abstraction shared by every kernel in the crate.

use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use rustfft::FftNum;

/// Real scalar usable by the spectral kernels: `f32` or `f64`.
///
/// `FftNum` drags in `num_traits::Signed`, whose `abs`/`signum` collide with
/// the `Float` methods of the same name; call them as `Float::abs(x)` in
/// generic code.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + FftNum
    + Default
    + Display
    + LowerExp
    + Debug
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into the scalar type.
    fn lit(x: f64) -> Self;

    /// Lossy conversion to `f64` for reporting.
    fn as_f64(self) -> f64;

    fn usz(n: usize) -> Self {
        Self::lit(n as f64)
    }

    fn two_pi() -> Self {
        Self::TAU()
    }
}

impl Scalar for f32 {
    #[inline]
    fn lit(x: f64) -> Self {
        x as f32
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    #[inline]
    fn lit(x: f64) -> Self {
        x
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}

/// `Float::abs` without the `Signed` ambiguity.
#[inline]
pub fn fabs<T: Scalar>(x: T) -> T {
    Float::abs(x)
}
