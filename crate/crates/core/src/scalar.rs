use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Floating-point scalar the geometry routines are written against.
///
/// Implemented for `f32` and `f64`. Tolerances quoted throughout the crate
/// assume `f64`; `f32` runs are useful for smoke tests only.
pub trait Real:
    Float + FloatConst + FromPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal must be representable")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count must be representable")
    }

    #[inline]
    fn from_int(n: i64) -> Self {
        Self::from_i64(n).expect("integer must be representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Fractional part in `[0, 1)`.
    #[inline]
    fn frac(self) -> Self {
        let r = self - self.floor();
        if r >= Self::one() {
            Self::zero()
        } else {
            r
        }
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[inline]
pub(crate) fn two_pi<T: Real>() -> T {
    T::TAU()
}
