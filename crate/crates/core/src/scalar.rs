use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar the engine is generic over: `f32`, `f64`, or any
/// extended-precision type implementing the same numeric traits.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Send + Sync + 'static
{
    /// Converts a literal. Panics only for types that cannot represent
    /// ordinary finite `f64` values.
    #[inline]
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("scalar type cannot represent an f64 literal")
    }

    #[inline]
    fn of_usize(value: usize) -> Self {
        Self::from_usize(value).expect("scalar type cannot represent a usize")
    }

    /// Lossy conversion used for reporting.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where
    T: Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Send + Sync + 'static
{
}

/// Largest absolute value in a slice (0 for an empty slice).
pub fn max_abs<T: Scalar>(values: &[T]) -> T {
    values.iter().fold(T::zero(), |acc, v| acc.max(v.abs()))
}

/// `residual / scale`, defined as 0 when both vanish and as the raw residual
/// when only the scale vanishes.
pub fn scaled<T: Scalar>(residual: T, scale: T) -> T {
    if scale > T::zero() {
        residual / scale
    } else {
        residual
    }
}
