//! Scalar abstraction for the numeric core.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign};

/// Floating-point scalar for probabilities, losses, and model parameters.
///
/// Implemented by `f32` and `f64`. Constants are written as `f64` literals
/// and converted with `S::from(x).unwrap()`, which is lossless for the
/// constants used in this crate.
pub trait Scalar:
    Float + FromPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
}

impl<T> Scalar for T where
    T: Float + FromPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean<S: Scalar>(values: &[S]) -> S {
        values.iter().copied().sum::<S>() / S::from(values.len()).unwrap()
    }

    #[test]
    fn generic_math_works_for_both_widths() {
        assert_eq!(mean(&[1.0f64, 2.0, 3.0]), 2.0);
        assert_eq!(mean(&[1.0f32, 2.0, 3.0]), 2.0);
    }
}
