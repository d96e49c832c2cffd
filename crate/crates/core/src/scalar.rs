//! Scalar abstraction shared by every geometric kernel in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point type the geometry and metric code is generic over.
///
/// Implemented for `f32` and `f64`. Persisted data and the pipeline use `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn two() -> Self {
        Self::one() + Self::one()
    }

    #[inline]
    fn half() -> Self {
        Self::lit(0.5)
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }

    /// `acos` with its argument clamped to `[-1, 1]`.
    #[inline]
    fn acos_clamped(self) -> Self {
        self.max(-Self::one()).min(Self::one()).acos()
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Index of the largest element under a total order on `partial_cmp`; NaNs panic.
pub(crate) fn argmax<T: Real>(values: impl IntoIterator<Item = T>) -> Option<(usize, T)> {
    let mut best: Option<(usize, T)> = None;
    for (i, v) in values.into_iter().enumerate() {
        assert!(!v.is_nan(), "got NaN value");
        match best {
            Some((_, b)) if b >= v => {}
            _ => best = Some((i, v)),
        }
    }
    best
}
