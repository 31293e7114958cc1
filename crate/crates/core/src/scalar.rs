//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar the library is generic over (`f32` and `f64`).
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal, rounding to the nearest representable value.
    fn lit(x: f64) -> Self;

    /// Widens to `f64` for reporting and serialization.
    fn as_f64(self) -> f64;
}

macro_rules! impl_real {
    ($($t:ty),*) => {
        $(
            impl Real for $t {
                #[inline]
                fn lit(x: f64) -> Self {
                    x as $t
                }

                #[inline]
                fn as_f64(self) -> f64 {
                    self as f64
                }
            }
        )*
    };
}

impl_real!(f32, f64);

/// Slack allowed when checking that probabilities sum to one: 1e-9, or a
/// few dozen ulps when the scalar type is coarser than that.
pub(crate) fn probability_tolerance<R: Real>() -> R {
    R::lit(1e-9).max(R::epsilon() * R::lit(64.0))
}

pub(crate) fn dot<R: Real>(a: &[R], b: &[R]) -> R {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub(crate) fn norm<R: Real>(a: &[R]) -> R {
    dot(a, a).sqrt()
}

pub(crate) fn all_finite<R: Real>(v: &[R]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Mean and unbiased sample variance (zero for a single sample).
pub(crate) fn mean_var<R: Real>(xs: &[R]) -> (R, R) {
    let n = R::from_usize(xs.len()).unwrap_or_else(R::one);
    if xs.is_empty() {
        return (R::zero(), R::zero());
    }
    let mean = xs.iter().copied().sum::<R>() / n;
    if xs.len() < 2 {
        return (mean, R::zero());
    }
    let ss: R = xs.iter().map(|&x| (x - mean) * (x - mean)).sum();
    (mean, ss / (n - R::one()))
}
