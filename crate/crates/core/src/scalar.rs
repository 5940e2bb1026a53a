//! Scalar abstraction shared by every numeric routine in the crate.
//!
//! Probabilities, utilities and virtual times are all carried as a [`Real`].
//! `f64` is the working precision used by the file formats and the CLI;
//! `f32` is supported for memory-constrained callers with a looser
//! normalization tolerance.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Slack allowed when checking that a CPT row sums to one.
    fn normalization_tolerance() -> Self;

    /// Slope difference under which two expected-utility lines count as parallel.
    fn parallel_tolerance() -> Self;

    /// Converts an `f64` literal. Panics only if the value is not representable,
    /// which cannot happen for finite literals and the two supported types.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    fn normalization_tolerance() -> Self {
        1e-9
    }

    fn parallel_tolerance() -> Self {
        1e-12
    }
}

impl Real for f32 {
    fn normalization_tolerance() -> Self {
        1e-5
    }

    fn parallel_tolerance() -> Self {
        1e-6
    }
}
