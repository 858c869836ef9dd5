//! Floating-point abstraction shared by every numeric routine in the crate.
//!
//! All core math is generic over [`Scalar`] so the same code runs in `f32`
//! or `f64`; the concrete aliases at the crate root pin `f64` for the
//! tolerances quoted throughout the documentation.

use num_complex::Complex;

/// Real scalar type the toolkit is generic over.
///
/// `nalgebra::RealField` supplies the transcendental functions and
/// constants, `FromPrimitive`/`ToPrimitive` the literal conversions; serde
/// derives on the data types add their own bounds.
pub trait Scalar:
    nalgebra::RealField + num_traits::FromPrimitive + num_traits::ToPrimitive + Copy + Default
{
    /// Convert an `f64` literal into this scalar type.
    fn fl(x: f64) -> Self {
        Self::from_f64(x).expect("representable literal")
    }

    /// Report this value as `f64` (lossless for the supported types).
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }

    /// Baseline relative tolerance for linear-algebra residual checks.
    fn residual_tol() -> Self;
}

impl Scalar for f32 {
    fn residual_tol() -> Self {
        2e-4
    }
}

impl Scalar for f64 {
    fn residual_tol() -> Self {
        1e-10
    }
}

/// Complex value over a [`Scalar`].
pub type Cx<T> = Complex<T>;

/// Build a complex number from real and imaginary parts.
pub fn cx<T: Scalar>(re: T, im: T) -> Cx<T> {
    Complex::new(re, im)
}

/// Purely real complex value.
pub fn cxr<T: Scalar>(re: T) -> Cx<T> {
    Complex::new(re, T::zero())
}
