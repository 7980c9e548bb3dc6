//! Scalar abstraction shared by every numeric routine in the crate.
//!
//! All spectral code is written against [`Real`], which is implemented for
//! `f32` and `f64`. Tolerances are given as `f64` literals and converted with
//! [`Real::tol`], which clamps them to something the scalar can resolve.

use nalgebra::{Complex, RealField};
use num_traits::ToPrimitive;

/// Real floating-point scalar usable by the linear algebra in this crate.
pub trait Real: RealField + Copy + ToPrimitive + Default {
    /// Converts an `f64` literal.
    fn lit(x: f64) -> Self {
        nalgebra::convert(x)
    }

    /// Converts an `f64` tolerance, clamped from below to a small multiple
    /// of the scalar's machine epsilon.
    fn tol(x: f64) -> Self {
        let floor = Self::default_epsilon() * Self::lit(1e3);
        Self::lit(x).max(floor)
    }

    fn from_count(n: usize) -> Self {
        Self::lit(n as f64)
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex scalar built on a [`Real`].
pub type C<T> = Complex<T>;

pub(crate) fn cplx<T: Real>(re: T) -> C<T> {
    Complex::new(re, T::zero())
}
