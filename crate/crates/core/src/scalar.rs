//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, NumCast};
use rustfft::FftNum;

/// Floating-point scalar usable on a spectral grid: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + NumCast + FftNum + Debug + Display + Default
{
    /// Converts an `f64` literal; infallible for the supported float types.
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 literal representable")
    }

    fn from_usize_lossy(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("usize representable")
    }

    fn to_f64_lossy(self) -> f64 {
        <f64 as NumCast>::from(self).expect("float converts to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}
