use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssignOps, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point type the calibration code is generic over: `f32` or `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssignOps
    + Sum
    + Debug
    + Display
    + LowerExp
    + Default
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal, rounding to the nearest representable value.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn half() -> Self {
        Self::lit(0.5)
    }

    #[inline]
    fn two() -> Self {
        Self::lit(2.0)
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("usize representable")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Distance in units in the last place between two finite values of the same
/// sign. Returns `u64::MAX` if either is non-finite or the signs differ.
pub fn ulp_distance<T: Scalar>(a: T, b: T) -> u64 {
    if !a.is_finite() || !b.is_finite() {
        return u64::MAX;
    }
    if a == b {
        return 0;
    }
    if a.is_sign_negative() != b.is_sign_negative() {
        return u64::MAX;
    }
    // Works for both widths because f32 -> f64 is exact; the distance is then
    // rescaled by the mantissa width difference.
    let (a, b) = (a.to_f64_lossy(), b.to_f64_lossy());
    let d = (a.to_bits() as i64 - b.to_bits() as i64).unsigned_abs();
    let shift = 52 - (T::epsilon().to_f64_lossy().log2().abs().round() as u32);
    d >> shift
}
