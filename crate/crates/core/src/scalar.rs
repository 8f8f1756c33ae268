use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssignOps, ToPrimitive};

/// Floating-point scalar the numeric core is generic over: `f32` or `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssignOps
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Conversion from `f64`, for literals and I/O boundaries.
    fn from_f(v: f64) -> Self;

    /// Widening conversion to `f64`, for I/O and reporting.
    fn to_f(self) -> f64;

    /// Conversion from `usize` counts.
    fn from_count(n: usize) -> Self {
        Self::from_f(n as f64)
    }
}

impl Scalar for f32 {
    fn from_f(v: f64) -> Self {
        v as f32
    }

    fn to_f(self) -> f64 {
        f64::from(self)
    }
}

impl Scalar for f64 {
    fn from_f(v: f64) -> Self {
        v
    }

    fn to_f(self) -> f64 {
        self
    }
}
