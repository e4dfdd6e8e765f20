use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Floating point type the transforms, front end, attacks and classifier are
/// written against. Implemented for `f32` and `f64`.
pub trait Real:
    'static
    + Float
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
{
    /// Converts an `f64` literal. Panics only if the target type cannot
    /// represent finite `f64` values, which never happens for `f32`/`f64`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize fits in float")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Sign with `sign(0) = 0`, unlike `Float::signum`.
    #[inline]
    fn sign0(self) -> Self {
        if self > Self::zero() {
            Self::one()
        } else if self < Self::zero() {
            -Self::one()
        } else {
            Self::zero()
        }
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub(crate) fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub(crate) fn norm1<T: Real>(a: &[T]) -> T {
    a.iter().map(|x| x.abs()).sum()
}

pub(crate) fn norm2<T: Real>(a: &[T]) -> T {
    a.iter().map(|&x| x * x).sum::<T>().sqrt()
}

pub(crate) fn norm_inf<T: Real>(a: &[T]) -> T {
    a.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sign_of_zero_is_zero() {
        assert_eq!(0.0f64.sign0(), 0.0);
        assert_eq!((-0.0f64).sign0(), 0.0);
        assert_eq!((-3.0f32).sign0(), -1.0);
        assert_eq!(2.5f64.sign0(), 1.0);
    }

    #[test]
    fn norms() {
        let v = [3.0f64, -4.0];
        assert_eq!(norm1(&v), 7.0);
        assert_eq!(norm2(&v), 5.0);
        assert_eq!(norm_inf(&v), 4.0);
        assert_eq!(dot(&v, &v), 25.0);
    }
}
