//! Scalar abstraction for the numeric core.
//!
//! Everything numerical in this crate is generic over [`Scalar`], which is
//! any real field nalgebra can factor and exponentiate (`f32`, `f64`).
//! Concrete `f64` aliases for the main types live at the crate root.

use num_complex::Complex;

/// Real scalar type the toolbox operates on: `f32` or `f64`.
pub trait Scalar: nalgebra::RealField + Copy {}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Convert an `f64` constant to the working scalar type.
#[inline]
pub fn sc<T: Scalar>(x: f64) -> T {
    nalgebra::convert(x)
}

/// Convert a working scalar back to `f64` (lossless for f64, widening for f32).
#[inline]
pub fn to_f64<T: Scalar>(x: T) -> f64 {
    nalgebra::try_convert::<T, f64>(x).unwrap_or(f64::NAN)
}

/// Complex value over the working scalar.
pub type C<T> = Complex<T>;

/// `r * e^{j theta}` without requiring `num_traits::Float`.
#[inline]
pub fn from_polar<T: Scalar>(r: T, theta: T) -> C<T> {
    Complex::new(r * theta.cos(), r * theta.sin())
}

/// `j * omega`.
#[inline]
pub fn jw<T: Scalar>(omega: T) -> C<T> {
    Complex::new(T::zero(), omega)
}
