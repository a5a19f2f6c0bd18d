//! Scalar abstraction for the numeric core.

use ndarray::ScalarOperand;
use num_traits::{Float, FromPrimitive, NumAssignOps, ToPrimitive};
use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Floating-point scalar type the numeric core is generic over.
///
/// Implemented for `f32` and `f64`. The benchmarks and the CLI run on `f64`;
/// the generic parameter exists so the substrate can be reused at other
/// precisions.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssignOps
    + ScalarOperand
    + Sum<Self>
    + Display
    + Debug
    + Send
    + Sync
    + 'static
{
    /// Convert an `f64` constant into this scalar type.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant representable in scalar type")
    }

    /// Widen to `f64` (used at serialization and reporting boundaries).
    fn widen(self) -> f64 {
        self.to_f64().expect("scalar representable as f64")
    }
}

impl<T> Scalar for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + NumAssignOps
        + ScalarOperand
        + Sum<T>
        + Display
        + Debug
        + Send
        + Sync
        + 'static
{
}
