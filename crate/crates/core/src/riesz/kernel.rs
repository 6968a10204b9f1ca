//! The radial reduction of `|x - y|^{alpha - n}`.
//!
//! For radial `f`, `int_{R^n} |x - y|^{alpha - n} f(|y|) dy = int_0^inf K(|x|, s) f(s) s^{n-1} ds`
//! with
//!
//! ```text
//! K(r, s) = |S^{n-2}| int_0^pi (r^2 + s^2 - 2 r s cos t)^{(alpha - n)/2} sin^{n-2} t dt.
//! ```
//!
//! `K` is homogeneous of degree `alpha - n`, so everything reduces to the
//! profile `k(tau) = K(1, e^tau) e^{n tau}`, which satisfies
//! `int K(r, s) g(s) s^{n-1} ds = r^alpha int k(tau) g(r e^tau) d tau`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadOptions};
use crate::real::{sphere_area, Real};

/// Relative tolerance of the angular integral.
pub const ANGULAR_REL_TOL: f64 = 1e-11;

/// Constant in front of the Riesz kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Normalization {
    /// `u = int |x - y|^{alpha - n} v^q dy` exactly as written, no constant.
    Plain,
    /// `u = c_{n,alpha} int |x - y|^{alpha - n} v^q dy` with the constant that
    /// makes the operator `(-Delta)^{-alpha/2}`; for `alpha = 2k` the system is
    /// then literally `(-Delta)^k u = v^q`.
    #[default]
    Laplacian,
}

impl Normalization {
    /// Multiplicative constant applied to the plain kernel.
    pub fn constant<T: Real>(self, n: u32, alpha: T) -> T {
        match self {
            Normalization::Plain => T::one(),
            Normalization::Laplacian => {
                use statrs::function::gamma::gamma;
                let a = alpha.as_f64();
                let nf = n as f64;
                let c = gamma((nf - a) / 2.0)
                    / (std::f64::consts::PI.powf(nf / 2.0) * 2f64.powf(a) * gamma(a / 2.0));
                T::lit(c)
            }
        }
    }
}

fn check_dims<T: Real>(n: u32, alpha: T) -> Result<()> {
    if n < 3 {
        return Err(Error::Validation(format!("dimension n = {n} violates n >= 3")));
    }
    if !(alpha > T::zero() && alpha < T::from_u32(n).unwrap()) {
        return Err(Error::Validation(format!("alpha = {alpha} violates 0 < alpha < n = {n}")));
    }
    Ok(())
}

/// Angular integral with `gap2 = (r - s)^2` and `prod4 = 4 r s` supplied
/// separately, so callers can form the gap without cancellation.
fn angular<T: Real>(gap2: T, prod4: T, n: u32, alpha: T) -> Result<T> {
    let expo = T::lit(0.5) * (alpha - T::from_u32(n).unwrap());
    let pi = T::PI();
    let s_outer: T = sphere_area(n - 1);
    if prod4 == T::zero() {
        let s_full: T = sphere_area(n);
        return Ok(s_full * gap2.powf(expo));
    }
    let sin_pow = (n - 2) as i32;
    let half = T::lit(0.5);
    let integrand = |t: T| -> T {
        let s = (half * t).sin();
        (gap2 + prod4 * s * s).powf(expo) * t.sin().powi(sin_pow)
    };
    let opts = QuadOptions::rel(ANGULAR_REL_TOL);

    if gap2 == T::zero() {
        // Integrand ~ (r s)^{expo} t^{alpha - 2} at the origin.
        if alpha <= T::one() {
            return Err(Error::SingularEvaluation {
                radius: (half * prod4.sqrt()).as_f64(),
                alpha: alpha.as_f64(),
            });
        }
        let levels = 60;
        let mut bps: Vec<T> = (0..=levels).rev().map(|k| pi * T::lit(0.5f64.powi(k))).collect();
        bps.dedup();
        let t_min = bps[0];
        let head = (T::lit(0.25) * prod4).powf(expo) * t_min.powf(alpha - T::one()) / (alpha - T::one());
        let q = integrate(integrand, &bps, opts)?;
        return Ok(s_outer * (q.value + head));
    }

    let ratio = (gap2 / prod4).sqrt();
    let t_c = if ratio >= T::one() {
        pi
    } else {
        T::lit(2.0) * ratio.asin()
    };
    let mut bps = vec![T::zero()];
    if t_c < pi / T::lit(8.0) {
        let mut t = t_c * T::lit(1.0 / 256.0);
        while t < pi {
            bps.push(t);
            t = t * T::lit(2.0);
        }
    } else {
        bps.push(half * pi);
    }
    bps.push(pi);
    let q = integrate(integrand, &bps, opts)?;
    Ok(s_outer * q.value)
}

/// Radial kernel `K(r, s)` (plain normalization) by adaptive quadrature.
///
/// Fails with [`Error::SingularEvaluation`] on the diagonal `r = s` when
/// `alpha <= 1`, where the pointwise kernel is infinite.
pub fn angular_kernel<T: Real>(r: T, s: T, n: u32, alpha: T) -> Result<T> {
    check_dims(n, alpha)?;
    if !(r >= T::zero() && s >= T::zero()) || (r == T::zero() && s == T::zero()) {
        return Err(Error::Validation(format!(
            "kernel radii must be nonnegative and not both zero, got r = {r}, s = {s}"
        )));
    }
    let gap = r - s;
    angular(gap * gap, T::lit(4.0) * r * s, n, alpha)
}

/// Log-coordinate kernel profile `k(tau) = K(1, e^tau) e^{n tau}`.
#[derive(Debug, Clone, Copy)]
pub struct KernelProfile<T> {
    pub n: u32,
    pub alpha: T,
}

impl<T: Real> KernelProfile<T> {
    pub fn new(n: u32, alpha: T) -> Result<Self> {
        check_dims(n, alpha)?;
        Ok(Self { n, alpha })
    }

    pub fn eval(&self, tau: T) -> Result<T> {
        let gap = tau.exp_m1();
        let e = tau.exp();
        let k = angular(gap * gap, T::lit(4.0) * e, self.n, self.alpha)?;
        Ok(k * (T::from_u32(self.n).unwrap() * tau).exp())
    }

    /// Leading behaviour `|S^{n-1}| e^{alpha tau}` of the profile as `tau -> +inf`.
    pub fn far_coefficient(&self) -> T {
        sphere_area(self.n)
    }
}

/// `c(n, alpha, beta)` in `int |x - y|^{alpha - n} |y|^{-beta} dy = c |x|^{alpha - beta}`
/// (plain normalization), computed as `int k(tau) e^{-beta tau} d tau`.
///
/// Valid for `alpha < beta < n`. Evaluated in `f64` for every `T`.
pub fn power_law_constant<T: Real>(n: u32, alpha: T, beta: T) -> Result<T> {
    power_law_constant_f64(n, alpha.as_f64(), beta.as_f64()).map(T::lit)
}

fn power_law_constant_f64(n: u32, alpha: f64, beta: f64) -> Result<f64> {
    let profile = KernelProfile::new(n, alpha)?;
    let nf = n as f64;
    if !(beta > alpha) {
        return Err(Error::PowerLawRange(format!("beta = {beta} must exceed alpha = {alpha}")));
    }
    if !(beta < nf) {
        return Err(Error::PowerLawRange(format!("beta = {beta} must be below n = {n}")));
    }
    let span = 20.0;
    let bps = [-20.0, -10.0, -5.0, -2.0, -1.0, -0.5, -0.1, 0.0, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0];
    let mut failure = None;
    let q = integrate(
        |tau| match profile.eval(tau) {
            Ok(k) => k * (-beta * tau).exp(),
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        &bps,
        QuadOptions::rel(1e-13),
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    // k ~ |S| e^{n tau} to the left and |S| e^{alpha tau} to the right, both up to O(e^{-2|tau|}).
    let s: f64 = sphere_area(n);
    let left = s * (-(nf - beta) * span).exp() / (nf - beta);
    let right = s * (-(beta - alpha) * span).exp() / (beta - alpha);
    Ok(q.value + left + right)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn origin_collapses_to_sphere_area() {
        let k = angular_kernel(0.0, 1.0, 3, 2.0).unwrap();
        assert!((k - 4.0 * PI).abs() < 1e-12);
        let k = angular_kernel(0.0, 2.0, 5, 1.5).unwrap();
        let want = sphere_area::<f64>(5) * 2f64.powf(1.5 - 5.0);
        assert!((k - want).abs() < 1e-12 * want);
    }

    #[test]
    fn newtonian_kernel_in_three_dimensions() {
        // 4 pi min(r, s) / (r s)
        let k = angular_kernel(1.0, 2.0, 3, 2.0).unwrap();
        assert!((k - 2.0 * PI).abs() < 1e-10);
        for (r, s) in [(0.3, 0.30001), (5.0, 0.01), (1.0, 1.0)] {
            let want = 4.0 * PI * f64::min(r, s) / (r * s);
            let got = angular_kernel(r, s, 3, 2.0).unwrap();
            assert!(((got - want) / want).abs() < 1e-9, "({r}, {s}): {got} vs {want}");
        }
    }

    #[test]
    fn diagonal_is_singular_for_small_alpha() {
        assert!(matches!(
            angular_kernel(1.0, 1.0, 4, 0.8),
            Err(Error::SingularEvaluation { .. })
        ));
        assert!(angular_kernel(1.0, 1.0 + 1e-6, 4, 0.8).is_ok());
        assert!(angular_kernel(1.0f64, 1.0, 4, 1.5).unwrap().is_finite());
    }

    #[test]
    fn laplacian_normalization_constants() {
        // alpha = 2: 1 / ((n - 2) |S^{n-1}|)
        for n in [3u32, 4, 5, 6] {
            let c: f64 = Normalization::Laplacian.constant(n, 2.0);
            let want = 1.0 / ((n as f64 - 2.0) * sphere_area::<f64>(n));
            assert!((c - want).abs() < 1e-14 * want);
        }
        assert_eq!(Normalization::Plain.constant::<f64>(5, 2.0), 1.0);
    }

    #[test]
    fn power_law_constant_rejects_out_of_range() {
        assert!(matches!(power_law_constant(5, 2.0, 2.0), Err(Error::PowerLawRange(_))));
        assert!(matches!(power_law_constant(5, 2.0, 5.0), Err(Error::PowerLawRange(_))));
    }

    #[test]
    fn power_law_constant_newtonian_case() {
        // n = 5, alpha = 2, beta = 3: -Delta r^{-1} = 2 r^{-3} gives 4 pi^2.
        let c = power_law_constant(5, 2.0, 3.0).unwrap();
        assert!((c - 4.0 * PI * PI).abs() < 1e-9 * c, "{c}");
    }
}
