//! Floating point abstraction used by the curve and scoring math.

use std::fmt::Debug;

use num_traits::{Float, FromPrimitive};

/// Real scalar the scoring math is generic over: `f32` or `f64`.
pub trait Scalar: Float + FromPrimitive + Debug + Default + Send + Sync + 'static {
    /// Lossless for the literal constants used in this crate.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("scalar literal out of range")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Clamp `v` into `[lo, hi]`.
pub fn clamp<T: Scalar>(v: T, lo: T, hi: T) -> T {
    v.max(lo).min(hi)
}
