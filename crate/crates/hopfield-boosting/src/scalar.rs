//! Floating-point scalar abstraction for the numeric kernels.

use ndarray::ScalarOperand;
use num_traits::Float;
use std::fmt::{Debug, Display};

/// Floating-point scalar the energy kernels are generic over: `f32` or `f64`.
pub trait Scalar: Float + ScalarOperand + Debug + Display + Send + Sync + 'static {}

impl<T> Scalar for T where T: Float + ScalarOperand + Debug + Display + Send + Sync + 'static {}

/// Converts an `f64` constant into the scalar type.
///
/// Panics if the value is not representable, which cannot happen for the
/// constants used in this crate (small integers, logs, tolerances).
pub(crate) fn cast<F: Scalar>(v: f64) -> F {
    F::from(v).expect("constant representable in scalar type")
}
