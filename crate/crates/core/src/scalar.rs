//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

pub use num_complex::Complex;

/// Real floating-point scalar: `f32` or `f64`.
///
/// All algorithms are written against this trait. Tolerances quoted in the
/// documentation assume `f64`; with `f32` the same code runs but only the
/// closed-form routines reach single-precision accuracy.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + LowerExp
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Panics only for values unrepresentable as `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("count representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Largest representable value strictly below `self` (for finite, nonzero spacing).
    fn prev_down(self) -> Self;
}

impl Real for f32 {
    fn prev_down(self) -> Self {
        if self.is_nan() || self == f32::NEG_INFINITY {
            return self;
        }
        if self == 0.0 {
            return -f32::from_bits(1);
        }
        let bits = self.to_bits();
        f32::from_bits(if self > 0.0 { bits - 1 } else { bits + 1 })
    }
}

impl Real for f64 {
    fn prev_down(self) -> Self {
        if self.is_nan() || self == f64::NEG_INFINITY {
            return self;
        }
        if self == 0.0 {
            return -f64::from_bits(1);
        }
        let bits = self.to_bits();
        f64::from_bits(if self > 0.0 { bits - 1 } else { bits + 1 })
    }
}

/// Shorthand for [`Real::lit`].
#[inline]
pub(crate) fn c<T: Real>(x: f64) -> T {
    T::lit(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prev_down_is_adjacent() {
        let x = 1.0f64;
        assert!(x.prev_down() < x);
        assert_eq!(x.prev_down().to_bits() + 1, x.to_bits());
        assert!((-2.0f32).prev_down() < -2.0);
        assert!(0.0f64.prev_down() < 0.0);
    }
}
