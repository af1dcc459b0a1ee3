//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FloatConst, FromPrimitive};

/// Real floating-point type the library computes with.
///
/// Implemented for `f32` and `f64`. Tolerances quoted throughout the docs
/// assume `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + FromStr + Debug + Display + Default + Sum + Send + Sync + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an `f64` literal into `T`.
#[inline(always)]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("literal representable in target float type")
}

/// Converts a count into `T`.
#[inline(always)]
pub fn from_usize<T: Real>(n: usize) -> T {
    T::from_usize(n).expect("count representable in target float type")
}
