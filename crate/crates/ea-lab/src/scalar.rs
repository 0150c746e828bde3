//! Scalar abstraction shared by the exact and floating-point paths.
//!
//! Structure constants, metrics, and every algebraic identity we certify are
//! rational, so the exact path runs over arbitrary-precision rationals and
//! the numeric path over IEEE floats. `Scalar` captures what linear algebra
//! needs from a field; `RealScalar` adds the analytic operations only floats
//! provide (square roots, trig, comparisons against tolerances).

use num_rational::BigRational;
use num_traits::{Float, FromPrimitive, Num, Signed, ToPrimitive};
use std::fmt::{Debug, Display};

/// Arbitrary-precision rational, the scalar of the exact path.
pub type Rational = BigRational;

/// Field scalar usable in dense linear algebra.
pub trait Scalar: Num + Signed + Clone + PartialOrd + Debug + Display + 'static {
    /// Pivots with `|p| <= pivot_tol()` are treated as zero during
    /// elimination. Zero for exact scalars, a small epsilon for floats.
    fn pivot_tol() -> Self;

    /// Injects an exact rational: lossless for `Rational`, rounded to
    /// nearest for floats.
    fn from_rational(r: &Rational) -> Self;

    fn from_int(n: i64) -> Self;
}

impl Scalar for Rational {
    fn pivot_tol() -> Self {
        num_traits::zero()
    }

    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }

    fn from_int(n: i64) -> Self {
        Rational::from_integer(n.into())
    }
}

impl Scalar for f64 {
    fn pivot_tol() -> Self {
        1e-12
    }

    fn from_rational(r: &Rational) -> Self {
        r.to_f64().unwrap_or(f64::NAN)
    }

    fn from_int(n: i64) -> Self {
        n as f64
    }
}

impl Scalar for f32 {
    fn pivot_tol() -> Self {
        1e-5
    }

    fn from_rational(r: &Rational) -> Self {
        r.to_f64().unwrap_or(f64::NAN) as f32
    }

    fn from_int(n: i64) -> Self {
        n as f32
    }
}

/// Floating-point scalar: everything numeric code needs beyond field ops.
pub trait RealScalar: Scalar + Float + FromPrimitive + ToPrimitive + Copy {
    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).expect("f64 converts to every RealScalar")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("every RealScalar converts to f64")
    }
}

impl<T> RealScalar for T where T: Scalar + Float + FromPrimitive + ToPrimitive + Copy {}

/// Convenience constructor for small rationals.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(num.into(), den.into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;

    #[test]
    fn rational_roundtrip_is_lossless() {
        let third = rat(1, 3);
        assert_eq!(Rational::from_rational(&third), third);
        assert!((f64::from_rational(&third) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn pivot_tol_is_zero_only_for_exact_scalars() {
        assert!(Rational::pivot_tol().is_zero());
        assert!(f64::pivot_tol() > 0.0);
        assert!(f32::pivot_tol() > 0.0);
    }
}
