//! Floating-point abstraction shared by every solver component.

use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::Serialize;

/// Real scalar the solver is generic over: `f32` or `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + LowerExp
    + Default
    + Serialize
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Panics only if the value is not representable,
    /// which never happens for the finite literals used in this crate.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Smallest relative tolerance that is still meaningful in this format.
    #[inline]
    fn noise_floor() -> Self {
        Self::epsilon() * Self::lit(64.0)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Sign of `x` as -1, 0 or +1, with zero for exact zero.
#[inline]
pub fn signum0<T: Scalar>(x: T) -> i8 {
    if x > T::zero() {
        1
    } else if x < T::zero() {
        -1
    } else {
        0
    }
}

/// Max of `|x_i|`; zero for an empty slice.
pub fn sup_norm<T: Scalar>(values: &[T]) -> T {
    values.iter().fold(T::zero(), |acc, &v| acc.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signum_has_a_zero_branch() {
        assert_eq!(signum0(0.0f64), 0);
        assert_eq!(signum0(-0.0f64), 0);
        assert_eq!(signum0(3.0f32), 1);
        assert_eq!(signum0(-1e-300f64), -1);
    }

    #[test]
    fn sup_norm_of_empty_is_zero() {
        assert_eq!(sup_norm::<f64>(&[]), 0.0);
        assert_eq!(sup_norm(&[1.0, -4.0, 2.0]), 4.0);
    }
}
