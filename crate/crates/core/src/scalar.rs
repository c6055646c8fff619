//! Scalar type bounds shared by every numeric routine in the crate.

use nalgebra::{Complex, RealField};
use num_traits::FromPrimitive;

/// Floating-point scalar usable throughout the crate.
///
/// `RealField` supplies field arithmetic and transcendentals, and
/// `FromPrimitive` converts literal constants and integer counts into the
/// working precision. Implemented by `f32` and `f64`.
pub trait Real: RealField + FromPrimitive + Copy + Send + Sync {
    /// Converts an `f64` constant, panicking only for types that cannot
    /// represent ordinary finite values (none of the supported ones).
    fn c(value: f64) -> Self {
        Self::from_f64(value).expect("finite constant must convert")
    }

    /// Converts a (small) unsigned count.
    fn of_usize(value: usize) -> Self {
        Self::from_usize(value).expect("count must convert")
    }
}

impl<T> Real for T where T: RealField + FromPrimitive + Copy + Send + Sync {}

/// Unit complex number `e^{i angle}` for a real angle.
///
/// `Complex::exp` demands `num_traits::Float`, which generic real fields do
/// not implement; this covers the only use the crate has for it.
pub fn cis<T: Real>(angle: T) -> Complex<T> {
    Complex::new(angle.cos(), angle.sin())
}

/// Lossy conversion to `f64` for error messages and diagnostics.
pub fn approx_f64<T: Real>(value: T) -> f64 {
    value.to_subset().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_real<T: Real>() {}

    #[test]
    fn implemented_for_standard_floats() {
        assert_real::<f32>();
        assert_real::<f64>();
    }

    #[test]
    fn constant_conversion_round_trips() {
        assert_eq!(f64::c(1.5), 1.5);
        assert_eq!(f32::c(0.25), 0.25f32);
        assert_eq!(f64::of_usize(7), 7.0);
    }

    #[test]
    fn cis_lies_on_unit_circle() {
        let z = cis(std::f64::consts::FRAC_PI_3);
        assert!((z.re - 0.5).abs() < 1e-15);
        assert!((z.im - 0.75f64.sqrt()).abs() < 1e-15);
    }
}
