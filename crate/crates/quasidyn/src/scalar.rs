//! Scalar abstraction shared by every numerical routine in the crate.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar type the library is generic over.
///
/// Implemented for `f32` and `f64`. Tolerances in the test-suite are tuned for
/// `f64`; `f32` works for the algebraic parts but finite differences lose most
/// of their digits.
pub trait Scalar: RealField + Copy + FromPrimitive + ToPrimitive + Default {
    /// Converts an `f64` literal into the scalar type.
    fn lit(x: f64) -> Self {
        nalgebra::convert(x)
    }

    /// Relative size below which singular values are treated as rounding
    /// noise: a thousand machine epsilons.
    fn noise_floor() -> f64 {
        1e3 * Self::default_epsilon().as_f64()
    }

    /// Lossy conversion used for reports and error messages.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
