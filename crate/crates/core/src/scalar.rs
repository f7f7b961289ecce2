//! Scalar abstraction shared by every numeric kernel in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use ndarray::ScalarOperand;
use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real floating-point scalar the algorithms are generic over.
///
/// Implemented for `f32` and `f64`. Exact arithmetic lives in [`crate::exact`]
/// and is used where a decision must not depend on rounding.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + ScalarOperand
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Panics only if the value is not representable
    /// at all, which cannot happen for `f32`/`f64`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Euclidean norm with scaling to avoid premature overflow/underflow.
pub fn norm2<T: Real>(xs: impl IntoIterator<Item = T> + Clone) -> T {
    let scale = xs
        .clone()
        .into_iter()
        .fold(T::zero(), |acc, x| acc.max(x.abs()));
    if scale == T::zero() || !scale.is_finite() {
        return scale;
    }
    let ssq: T = xs
        .into_iter()
        .map(|x| {
            let y = x / scale;
            y * y
        })
        .sum();
    scale * ssq.sqrt()
}
