//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point element type accepted by the solvers.
///
/// Implemented for `f32` and `f64`. Everything that touches embeddings,
/// logits or optimizer state is written against this trait; integer
/// bookkeeping (labels, counts, contingency tables) stays in `usize`/`u64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + LinalgScalar
    + ScalarOperand
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant into this type.
    #[inline]
    fn lit(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("f64 literal representable")
    }

    /// Converts a count into this type.
    #[inline]
    fn from_count(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("count representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Smallest probability used in place of an exact zero inside a logarithm.
    #[inline]
    fn tiny() -> Self {
        Self::min_positive_value()
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
