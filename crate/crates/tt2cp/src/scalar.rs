//! Scalar abstraction over the real and complex double-precision fields.
//!
//! The whole stack is generic over [`Field`] and instantiated twice, for
//! `f64` and `Complex64`. There is no runtime dispatch on the scalar type.

use std::fmt::Debug;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use num_complex::Complex64;
use num_traits::{One, Zero};
use rand::Rng;
use rand_distr::StandardNormal;

/// Scalar field of the tensor entries: `f64` or `Complex64`.
pub trait Field:
    Copy
    + Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Zero
    + One
    + Sum
    + ndarray::LinalgScalar
    + ndarray::ScalarOperand
    + faer::traits::ComplexField<Real = f64>
    + faer::traits::Conjugate<Canonical = Self>
{
    /// Identifier used by the TNSR file format (0 = f64, 1 = complex128).
    const DTYPE: u8;
    const IS_COMPLEX: bool;

    fn conj(self) -> Self;
    fn abs(self) -> f64;
    /// Squared magnitude, `re^2 + im^2`.
    fn square(self) -> f64;
    fn from_real(x: f64) -> Self;
    /// Multiply by a real scalar.
    fn scale(self, c: f64) -> Self;

    /// Draw from the standard (circularly-symmetric for complex) Gaussian.
    fn sample_standard<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Cast a complex value back into this field. For `f64` the imaginary
    /// part must be below `tol`, otherwise `None` signals a degenerate cast.
    fn from_c64(z: Complex64, tol: f64) -> Option<Self>;

    fn to_c64(self) -> Complex64;
}

impl Field for f64 {
    const DTYPE: u8 = 0;
    const IS_COMPLEX: bool = false;

    fn conj(self) -> Self {
        self
    }

    fn abs(self) -> f64 {
        f64::abs(self)
    }

    fn square(self) -> f64 {
        self * self
    }

    fn from_real(x: f64) -> Self {
        x
    }

    fn scale(self, c: f64) -> Self {
        self * c
    }

    fn sample_standard<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }

    fn from_c64(z: Complex64, tol: f64) -> Option<Self> {
        (z.im.abs() <= tol).then_some(z.re)
    }

    fn to_c64(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
}

impl Field for Complex64 {
    const DTYPE: u8 = 1;
    const IS_COMPLEX: bool = true;

    fn conj(self) -> Self {
        Complex64::conj(&self)
    }

    fn abs(self) -> f64 {
        self.norm()
    }

    fn square(self) -> f64 {
        self.norm_sqr()
    }

    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }

    fn scale(self, c: f64) -> Self {
        self * c
    }

    fn sample_standard<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    }

    fn from_c64(z: Complex64, _tol: f64) -> Option<Self> {
        Some(z)
    }

    fn to_c64(self) -> Complex64 {
        self
    }
}
