//! Scalar abstraction shared by every numerical module.
//!
//! All matrix code is written against [`Real`], so the same routines run in
//! `f32` and `f64`. Complex entries are `Complex<T>`.

use nalgebra::RealField;
use num_complex::Complex;
use num_traits::{FromPrimitive, ToPrimitive};
use std::fmt::{Debug, Display};

/// Real field usable as the scalar of operators, channels and estimators.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static {
    /// Converts an `f64` literal into `Self`.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    /// Maps a tolerance calibrated for `f64` onto this precision.
    fn tol(f64_tol: f64) -> Self;

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    fn tol(f64_tol: f64) -> Self {
        f64_tol
    }
}

impl Real for f32 {
    // f32 roundoff sits near 1e-7; accumulated matrix products need headroom.
    fn tol(f64_tol: f64) -> Self {
        f64_tol.max(1e-4) as f32
    }
}

/// Complex scalar over `T`.
pub type C<T> = Complex<T>;

pub(crate) fn c<T: Real>(re: f64, im: f64) -> C<T> {
    Complex::new(T::lit(re), T::lit(im))
}

pub(crate) fn re<T: Real>(x: T) -> C<T> {
    Complex::new(x, T::zero())
}

/// `i^k` for integer `k`.
pub fn i_pow<T: Real>(k: i32) -> C<T> {
    match k.rem_euclid(4) {
        0 => c(1.0, 0.0),
        1 => c(0.0, 1.0),
        2 => c(-1.0, 0.0),
        _ => c(0.0, -1.0),
    }
}

/// Modulus `|z|`.
pub fn cabs<T: Real>(z: C<T>) -> T {
    z.re.hypot(z.im)
}
