//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real floating-point scalar (implemented for `f32` and `f64`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + LowerExp
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts an `f64` literal into the scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(k: usize) -> Self {
        <Self as FromPrimitive>::from_usize(k).expect("usize representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    /// A tolerance no tighter than a few hundred ulps of the type.
    #[inline]
    fn tol_floor(requested: f64) -> Self {
        let eps = Self::epsilon().as_f64();
        Self::lit(requested.max(256.0 * eps))
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Relative closeness `|a - b| <= tol * max(|a|, |b|)`.
pub fn rel_close<T: Real>(a: T, b: T, tol: T) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs())
}

/// Surface area of the unit sphere `S^{m-1}` in `R^m`, i.e. `2 pi^{m/2} / Gamma(m/2)`.
pub fn sphere_area<T: Real>(m: u32) -> T {
    // Gamma(m/2) by the half-integer recursion.
    let mut gamma = if m.is_multiple_of(2) { 1.0_f64 } else { std::f64::consts::PI.sqrt() };
    let mut x = if m.is_multiple_of(2) { 1.0 } else { 0.5 };
    let target = m as f64 / 2.0;
    while x < target - 0.25 {
        gamma *= x;
        x += 1.0;
    }
    T::lit(2.0 * std::f64::consts::PI.powf(target) / gamma)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_areas() {
        let pi = std::f64::consts::PI;
        assert!((sphere_area::<f64>(2) - 2.0 * pi).abs() < 1e-14);
        assert!((sphere_area::<f64>(3) - 4.0 * pi).abs() < 1e-13);
        assert!((sphere_area::<f64>(4) - 2.0 * pi * pi).abs() < 1e-13);
        assert!((sphere_area::<f64>(5) - 8.0 * pi * pi / 3.0).abs() < 1e-12);
        assert!((sphere_area::<f32>(3) - 4.0 * std::f32::consts::PI).abs() < 1e-5);
    }
}
