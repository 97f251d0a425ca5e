//! Scalar abstraction: all numerics are generic over the float width.

use core::fmt::{Debug, Display, LowerExp};
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point scalar the library can compute with (`f32` or `f64`).
///
/// Bundles the `num_traits` float machinery with the formatting bounds the
/// reporting code needs. Algorithms never use `f64` literals directly;
/// constants enter through [`Real::lit`], so every routine works unchanged
/// at either width.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + LowerExp + 'static
{
    /// Converts an `f64` constant into `Self`.
    ///
    /// Panics only if the target type cannot represent the value at all,
    /// which cannot happen for finite constants and `f32`/`f64`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("constant not representable in scalar type")
    }

    /// Converts a `usize` (grid sizes, indices) into `Self`.
    #[inline]
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("size not representable in scalar type")
    }

    /// Widens to `f64` for reporting (error messages, diagnostics).
    #[inline]
    fn widen(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literals_round_trip_exactly_in_f64() {
        assert_eq!(f64::lit(9.81), 9.81);
        assert_eq!(f64::of_usize(129), 129.0);
    }

    #[test]
    fn f32_literals_round_to_nearest() {
        assert_eq!(f32::lit(0.5), 0.5f32);
        assert!((f32::lit(9.81) - 9.81f32).abs() < 1e-6);
    }

    fn generic_mean<T: Real>(xs: &[T]) -> T {
        let sum = xs.iter().fold(T::zero(), |a, &x| a + x);
        sum / T::of_usize(xs.len())
    }

    #[test]
    fn generic_code_runs_at_both_widths() {
        assert_eq!(generic_mean(&[1.0f64, 2.0, 3.0]), 2.0);
        assert_eq!(generic_mean(&[1.0f32, 2.0, 3.0]), 2.0);
    }
}
