//! Scalar abstraction shared by the analytic modules.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point scalar used throughout the analytic code: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into this scalar.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite conversion to f64")
    }

    /// A tolerance of `requested`, but never tighter than a few hundred ulps
    /// of this type at unit scale.
    #[inline]
    fn tol(requested: f64) -> Self {
        let floor = Self::epsilon() * Self::lit(256.0);
        Self::lit(requested).max(floor)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `max(x, 0)`.
#[inline]
pub fn pos<T: Real>(x: T) -> T {
    if x > T::zero() {
        x
    } else {
        T::zero()
    }
}

/// Numerically stable `log(sum(exp(xs)))`; returns `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp<T: Real>(xs: impl IntoIterator<Item = T> + Clone) -> T {
    let m = xs
        .clone()
        .into_iter()
        .fold(T::neg_infinity(), |a, b| a.max(b));
    if m == T::neg_infinity() || m.is_nan() {
        return m;
    }
    if m == T::infinity() {
        return m;
    }
    let s: T = xs.into_iter().map(|x| (x - m).exp()).sum();
    m + s.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tol_respects_precision_floor() {
        assert_eq!(<f64 as Real>::tol(1e-12), 1e-12);
        assert!(<f32 as Real>::tol(1e-12) > 1e-6);
    }

    #[test]
    fn lse_handles_extremes() {
        let v = log_sum_exp([1000.0_f64, 1000.0]);
        assert!((v - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp::<f64>([]), f64::NEG_INFINITY);
    }
}
