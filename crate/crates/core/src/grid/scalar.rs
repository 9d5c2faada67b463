use std::fmt::Debug;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex64;

/// Sample type of a grid function: `f64` or `Complex64`.
pub trait Scalar:
    Copy
    + Default
    + PartialEq
    + Debug
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + Mul<f64, Output = Self>
    + 'static
{
    const IS_COMPLEX: bool;

    fn modulus(self) -> f64;

    fn to_parts(self) -> (f64, f64);

    fn from_parts(re: f64, im: f64) -> Self;

    fn from_real(re: f64) -> Self {
        Self::from_parts(re, 0.0)
    }

    fn is_zero(self) -> bool {
        self == Self::default()
    }

    fn mul_scalar(self, other: Self) -> Self;
}

impl Scalar for f64 {
    const IS_COMPLEX: bool = false;

    fn modulus(self) -> f64 {
        self.abs()
    }

    fn to_parts(self) -> (f64, f64) {
        (self, 0.0)
    }

    fn from_parts(re: f64, _im: f64) -> Self {
        re
    }

    fn mul_scalar(self, other: Self) -> Self {
        self * other
    }
}

impl Scalar for Complex64 {
    const IS_COMPLEX: bool = true;

    fn modulus(self) -> f64 {
        self.norm()
    }

    fn to_parts(self) -> (f64, f64) {
        (self.re, self.im)
    }

    fn from_parts(re: f64, im: f64) -> Self {
        Complex64::new(re, im)
    }

    fn mul_scalar(self, other: Self) -> Self {
        self * other
    }
}
