//! Floating-point abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar the samplers are generic over: `f32` or `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + LowerExp
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into the scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// `(e^x - 1)` without cancellation near zero.
    #[inline]
    fn expm1_(self) -> Self {
        self.exp_m1()
    }

    /// `sinh(x)/x`, exact at the origin.
    fn sinhc(self) -> Self {
        let x2 = self * self;
        if self.abs() < Self::lit(1e-4) {
            Self::one() + x2 / Self::lit(6.0) + x2 * x2 / Self::lit(120.0)
        } else {
            self.sinh() / self
        }
    }

    /// `sin(x)/x`, exact at the origin.
    fn sinc(self) -> Self {
        let x2 = self * self;
        if self.abs() < Self::lit(1e-4) {
            Self::one() - x2 / Self::lit(6.0) + x2 * x2 / Self::lit(120.0)
        } else {
            self.sin() / self
        }
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sinc_and_sinhc_are_continuous_at_series_cutoff() {
        for &x in &[0.99e-4_f64, 1.01e-4] {
            assert!((x.sinc() - x.sin() / x).abs() < 4e-16);
            assert!((x.sinhc() - x.sinh() / x).abs() < 4e-16);
        }
        assert_eq!(0.0_f64.sinc(), 1.0);
        assert_eq!(0.0_f32.sinhc(), 1.0);
    }
}
