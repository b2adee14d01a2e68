//! Scalar abstraction for the closed-form math.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar the theory, scan and quantizer code is generic over (`f32` or `f64`).
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
}

impl<T> Real for T where
    T: Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
}

/// Converts an `f64` literal into `T`.
#[inline]
pub(crate) fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal representable in scalar type")
}

#[inline]
pub(crate) fn from_usize<T: Real>(x: usize) -> T {
    T::from_usize(x).expect("usize representable in scalar type")
}

/// Slack used for boundary comparisons: `1e-12` or a few ulps of `T`, whichever is larger.
#[inline]
pub fn boundary_slack<T: Real>() -> T {
    let ulps = T::epsilon() * lit(64.0);
    ulps.max(lit(1e-12))
}
