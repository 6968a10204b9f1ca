//! Exponent algebra of the HLS system `u = I_a[v^q]`, `v = I_a[u^p]`: regime
//! classification, integrability exponents and the fast/slow decay rates.
//!
//! All routines work in the canonical orientation `p <= q`. Inputs with
//! `p > q` are swapped on construction; the swap is recorded so callers can
//! exchange the roles of `u` and `v` back when reporting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

/// Relative tolerance for deciding equality in the critical condition.
pub const CRITICAL_REL_TOL: f64 = 1e-12;

/// Problem data `(n, alpha, p, q)` in canonical orientation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Params<T> {
    pub n: u32,
    pub alpha: T,
    pub p: T,
    pub q: T,
    /// `true` when the caller supplied `p > q`; `u` and `v` are exchanged.
    pub swapped: bool,
}

impl<T: Real> Params<T> {
    /// Validates the standing assumptions and normalizes to `p <= q`.
    pub fn new(n: u32, alpha: T, p: T, q: T) -> Result<Self> {
        if n < 3 {
            return Err(Error::Validation(format!("dimension n = {n} violates n >= 3")));
        }
        let nf = T::from_u32(n).unwrap();
        if !(alpha > T::zero() && alpha < nf) {
            return Err(Error::Validation(format!(
                "alpha = {alpha} violates 0 < alpha < n = {n}"
            )));
        }
        if !(p > T::zero()) || !(q > T::zero()) || !p.is_finite() || !q.is_finite() {
            return Err(Error::Validation(format!("exponents p = {p}, q = {q} violate p, q > 0")));
        }
        if !(p * q > T::one()) {
            return Err(Error::Validation(format!("exponents p = {p}, q = {q} violate pq > 1")));
        }
        let (p, q, swapped) = if p > q { (q, p, true) } else { (p, q, false) };
        Ok(Self { n, alpha, p, q, swapped })
    }

    /// Polyharmonic order `k` of `(-Delta)^k`, converted to `alpha = 2k`.
    pub fn from_order(n: u32, k: u32, p: T, q: T) -> Result<Self> {
        if k == 0 {
            return Err(Error::Validation("polyharmonic order k must be >= 1".into()));
        }
        Self::new(n, T::from_u32(2 * k).unwrap(), p, q)
    }

    pub fn dim(&self) -> T {
        T::from_u32(self.n).unwrap()
    }

    /// Exponents in the caller's original orientation.
    pub fn original_pq(&self) -> (T, T) {
        if self.swapped {
            (self.q, self.p)
        } else {
            (self.p, self.q)
        }
    }

    /// `alpha (q + 1) / (pq - 1)`, the slow decay rate of `u`.
    pub fn slow_rate_u(&self) -> T {
        self.alpha * (self.q + T::one()) / (self.p * self.q - T::one())
    }

    /// `alpha (p + 1) / (pq - 1)`, the slow decay rate of `v`.
    pub fn slow_rate_v(&self) -> T {
        self.alpha * (self.p + T::one()) / (self.p * self.q - T::one())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Subcritical,
    Critical,
    Supercritical,
}

/// Shape of the fast decay of `v`, set by the sign of `p (n - alpha) - n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VFastCase {
    /// `v ~ r^{alpha - n}`
    Pure,
    /// `v ~ r^{alpha - n} ln r`
    LogCorrected,
    /// `v ~ r^{(alpha - n)(p + 1) + n}`
    Weakened,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", bound = "T: Real")]
pub struct RegimeReport<T> {
    pub regime: Regime,
    pub r0: T,
    pub s0: T,
    pub fast_rate_u: T,
    pub fast_rate_v: T,
    pub v_fast_case: VFastCase,
    pub slow_rate_u: T,
    pub slow_rate_v: T,
    pub satisfies_ncc: bool,
}

/// Classifies the parameters and evaluates every exponent of interest.
pub fn classify<T: Real>(params: &Params<T>) -> RegimeReport<T> {
    let one = T::one();
    let Params { alpha, p, q, .. } = *params;
    let n = params.dim();
    let tol = T::tol_floor(CRITICAL_REL_TOL);

    let lhs = one / (p + one) + one / (q + one);
    let rhs = (n - alpha) / n;
    let regime = if (lhs - rhs).abs() <= tol * rhs {
        Regime::Critical
    } else if lhs < rhs {
        Regime::Supercritical
    } else {
        Regime::Subcritical
    };

    let pq1 = p * q - one;
    let r0 = n * pq1 / (alpha * (q + one));
    let s0 = n * pq1 / (alpha * (p + one));

    let fast_rate_u = n - alpha;
    let balance = p * (n - alpha);
    let v_fast_case = if (balance - n).abs() <= tol * n {
        VFastCase::LogCorrected
    } else if balance > n {
        VFastCase::Pure
    } else {
        VFastCase::Weakened
    };
    let fast_rate_v = match v_fast_case {
        VFastCase::Pure | VFastCase::LogCorrected => n - alpha,
        VFastCase::Weakened => p * n - (p + one) * alpha,
    };

    RegimeReport {
        regime,
        r0,
        s0,
        fast_rate_u,
        fast_rate_v,
        v_fast_case,
        slow_rate_u: params.slow_rate_u(),
        slow_rate_v: params.slow_rate_v(),
        satisfies_ncc: regime != Regime::Subcritical,
    }
}

/// Minimal tail decay exponents for `(u, v)` to lie in `L^{r0} x L^{s0}`:
/// `(n / r0, n / s0)`. These coincide with the slow rates.
pub fn integrability_thresholds<T: Real>(report: &RegimeReport<T>, n: u32) -> (T, T) {
    let nf = T::from_u32(n).unwrap();
    (nf / report.r0, nf / report.s0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(n: u32, a: f64, p: f64, q: f64) -> Params<f64> {
        Params::new(n, a, p, q).unwrap()
    }

    #[test]
    fn critical_example() {
        let r = classify(&p(4, 2.0, 3.0, 3.0));
        assert_eq!(r.regime, Regime::Critical);
        assert!((r.r0 - 4.0).abs() < 1e-14);
        assert!((r.s0 - 4.0).abs() < 1e-14);
    }

    #[test]
    fn supercritical_example() {
        let r = classify(&p(5, 2.0, 3.0, 3.0));
        assert_eq!(r.regime, Regime::Supercritical);
        assert!((r.slow_rate_u - 1.0).abs() < 1e-15);
        assert!((r.slow_rate_v - 1.0).abs() < 1e-15);
        assert!((r.fast_rate_u - 3.0).abs() < 1e-15);
        assert!(r.satisfies_ncc);
    }

    #[test]
    fn v_fast_cases() {
        let r = classify(&p(4, 2.0, 2.0, 9.0));
        assert_eq!(r.v_fast_case, VFastCase::LogCorrected);
        assert_eq!(r.fast_rate_v, 2.0);
        let r = classify(&p(4, 2.0, 1.5, 9.0));
        assert_eq!(r.v_fast_case, VFastCase::Weakened);
        assert!((r.fast_rate_v - 1.0).abs() < 1e-14);
        let r = classify(&p(4, 2.0, 3.0, 3.0));
        assert_eq!(r.v_fast_case, VFastCase::Pure);
    }

    #[test]
    fn subcritical_detected() {
        let r = classify(&p(3, 2.0, 2.0, 2.0));
        assert_eq!(r.regime, Regime::Subcritical);
        assert!(!r.satisfies_ncc);
    }

    #[test]
    fn validation_errors_name_assumption() {
        let e = Params::<f64>::new(2, 1.0, 2.0, 2.0).unwrap_err();
        assert!(e.to_string().contains("n >= 3"));
        let e = Params::<f64>::new(3, 4.0, 2.0, 2.0).unwrap_err();
        assert!(e.to_string().contains("alpha"));
        let e = Params::<f64>::new(3, 2.0, 0.5, 2.0).unwrap_err();
        assert!(e.to_string().contains("pq > 1"));
        let e = Params::<f64>::new(3, 2.0, -1.0, 2.0).unwrap_err();
        assert!(e.to_string().contains("p, q > 0"));
    }

    #[test]
    fn swap_is_recorded() {
        let a = p(5, 2.0, 4.0, 2.0);
        let b = p(5, 2.0, 2.0, 4.0);
        assert!(a.swapped && !b.swapped);
        assert_eq!(a.original_pq(), (4.0, 2.0));
        assert_eq!(classify(&a), classify(&b));
    }

    #[test]
    fn order_converts_to_alpha() {
        let a = Params::<f64>::from_order(3, 1, 3.0, 3.0).unwrap();
        assert_eq!(a.alpha, 2.0);
        assert!(Params::<f64>::from_order(4, 2, 3.0, 3.0).is_err());
    }

    #[test]
    fn thresholds_examples() {
        for (n, a) in [(5, 2.0), (4, 2.0)] {
            let r = classify(&p(n, a, 3.0, 3.0));
            let (tu, tv) = integrability_thresholds(&r, n);
            assert!((tu - 1.0).abs() < 1e-14 && (tv - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn works_in_single_precision() {
        let r = classify(&Params::<f32>::new(4, 2.0, 3.0, 3.0).unwrap());
        assert_eq!(r.regime, Regime::Critical);
    }
}
