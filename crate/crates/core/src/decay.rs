//! Tail-rate fitting, integrability predicates, the far-field limit checks for
//! fast-decaying pairs, the exponent blow-up recursion, the monotonicity
//! constant `epsilon_0`, and envelope checks on fitted rates.

use num_traits::{Num, Signed, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::{classify, Params, Regime, RegimeReport, VFastCase};
use crate::quadrature::exp_log_tail;
use crate::real::{sphere_area, Real};
use crate::riesz::{power_law_constant, Normalization, RadialField, RadialGrid};
use crate::solver::SolutionPair;

/// Relative tolerance on rate matching and limit checks.
pub const RATE_TOL: f64 = 0.05;
/// Minimum number of nodes in a fit window.
pub const MIN_FIT_NODES: usize = 10;
/// Required relative improvement before the log-corrected model is preferred.
pub const LOG_MODEL_GAIN: f64 = 0.05;
/// Fits with `r2` below this are flagged as possibly oscillating.
pub const R2_FLAG: f64 = 0.99;
/// `epsilon_0` at or above this counts as monotone for envelope checks.
pub const MONOTONE_EPS0: f64 = 0.1;
/// Floor for `min u r^{fast} / (u r^{fast})(window_lo)` in the lower-envelope check.
pub const LOWER_ENVELOPE_RATIO: f64 = 0.5;
/// Recursion guard: iteration stops once `|b_j|` exceeds this.
pub const RECURSION_OVERFLOW: f64 = 1e100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Role {
    U,
    V,
}

/// Least-squares tail model `f ~ amplitude r^{-exponent} (ln r)^{log_power}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", bound = "T: Real")]
pub struct DecayFit<T> {
    pub exponent: T,
    pub log_power: u8,
    pub amplitude: T,
    pub window_lo: T,
    pub window_hi: T,
    pub r2: T,
    pub nodes: usize,
}

/// Outermost decade ending at the node 90% of the way along the grid, widened
/// inward if it holds fewer than [`MIN_FIT_NODES`] nodes.
pub fn default_window<T: Real>(grid: &RadialGrid<T>) -> (T, T) {
    let nodes = grid.nodes();
    let hi_idx = (0.9 * (nodes.len() - 1) as f64).floor() as usize;
    let hi = nodes[hi_idx];
    let mut lo = (hi / T::lit(10.0)).max(grid.r_min());
    let lo_idx = hi_idx.saturating_sub(MIN_FIT_NODES - 1);
    if nodes[lo_idx] < lo {
        lo = nodes[lo_idx];
    }
    (lo, hi)
}

fn window_indices<T: Real>(grid: &RadialGrid<T>, lo: T, hi: T) -> Vec<usize> {
    // Window edges usually come from node values; allow for rounding.
    let slack = T::one() + T::lit(1e-9);
    grid.nodes()
        .iter()
        .enumerate()
        .filter(|(_, &r)| r * slack >= lo && r <= hi * slack)
        .map(|(i, _)| i)
        .collect()
}

struct LineFit<T> {
    slope: T,
    intercept: T,
    rss: T,
    tss: T,
}

fn line_fit<T: Real>(x: &[T], y: &[T]) -> Option<LineFit<T>> {
    let m = T::from_usize_lossy(x.len());
    let mx = x.iter().copied().sum::<T>() / m;
    let my = y.iter().copied().sum::<T>() / m;
    let sxx: T = x.iter().map(|&a| (a - mx) * (a - mx)).sum();
    if !(sxx > T::zero()) {
        return None;
    }
    let sxy: T = x.iter().zip(y).map(|(&a, &b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss = x.iter().zip(y).map(|(&a, &b)| (b - intercept - slope * a).powi(2)).sum();
    let tss = y.iter().map(|&b| (b - my) * (b - my)).sum();
    Some(LineFit { slope, intercept, rss, tss })
}

/// Fits `ln f = ln C - m ln r + kappa ln ln r` for `kappa` in `{0, 1}` on the
/// nodes inside `[window_lo, window_hi]`. The log-corrected model is only
/// tried when the whole window lies beyond `r = 1`, and only chosen when it
/// lowers the residual sum by more than [`LOG_MODEL_GAIN`].
pub fn fit_tail<T: Real>(f: &RadialField<T>, window_lo: T, window_hi: T) -> Result<DecayFit<T>> {
    if !(window_lo < window_hi) {
        return Err(Error::Validation(format!("fit window [{window_lo}, {window_hi}] is empty")));
    }
    let grid = f.grid();
    let idx = window_indices(grid, window_lo, window_hi);
    if idx.len() < MIN_FIT_NODES {
        return Err(Error::Validation(format!(
            "fit window [{window_lo:e}, {window_hi:e}] holds {} nodes, need {MIN_FIT_NODES}",
            idx.len()
        )));
    }
    let mut x = Vec::with_capacity(idx.len());
    let mut y = Vec::with_capacity(idx.len());
    for &i in &idx {
        let value = f.values()[i];
        if !(value > T::zero()) {
            return Err(Error::DegenerateFit(format!(
                "nonpositive sample {value} at r = {:e}",
                grid.nodes()[i]
            )));
        }
        x.push(grid.nodes()[i].ln());
        y.push(value.ln());
    }
    let plain = line_fit(&x, &y).ok_or_else(|| Error::DegenerateFit("zero variance in ln r".into()))?;
    let mut best = (plain, 0u8);
    if x[0] > T::zero() {
        let y1: Vec<T> = x.iter().zip(&y).map(|(&lr, &ly)| ly - lr.ln()).collect();
        if let Some(logged) = line_fit(&x, &y1) {
            if logged.rss < (T::one() - T::lit(LOG_MODEL_GAIN)) * best.0.rss {
                best = (logged, 1);
            }
        }
    }
    let (fit, log_power) = best;
    let r2 = if fit.tss > T::zero() {
        (T::one() - fit.rss / fit.tss).max(T::zero()).min(T::one())
    } else {
        T::one()
    };
    Ok(DecayFit {
        exponent: -fit.slope,
        log_power,
        amplitude: fit.intercept.exp(),
        window_lo: grid.nodes()[idx[0]],
        window_hi: grid.nodes()[*idx.last().unwrap()],
        r2,
        nodes: idx.len(),
    })
}

/// [`fit_tail`] on the [`default_window`].
pub fn fit_default<T: Real>(f: &RadialField<T>) -> Result<DecayFit<T>> {
    let (lo, hi) = default_window(f.grid());
    fit_tail(f, lo, hi)
}

/// Whether the fitted tail puts the field in `L^{r0}` (role `U`) or `L^{s0}`
/// (role `V`). A log factor never changes the verdict, so only the power is
/// compared: `exponent * r0 > n (1 + margin)`. The margin keeps fits that sit
/// on the exact boundary (slow decay) on the non-integrable side.
pub fn integrability_predicate_with_margin<T: Real>(fit: &DecayFit<T>, report: &RegimeReport<T>, n: u32, role: Role, margin: T) -> bool {
    let power = match role {
        Role::U => report.r0,
        Role::V => report.s0,
    };
    fit.exponent * power > T::from_u32(n).unwrap() * (T::one() + margin)
}

/// [`integrability_predicate_with_margin`] with margin [`RATE_TOL`].
pub fn integrability_predicate<T: Real>(fit: &DecayFit<T>, report: &RegimeReport<T>, n: u32, role: Role) -> bool {
    integrability_predicate_with_margin(fit, report, n, role, T::lit(RATE_TOL))
}

/// `|S^{n-1}| int_0^inf f(s)^power s^{n-1} ds`, with the constant inner
/// extension and the field's tail model.
pub fn field_integral<T: Real>(f: &RadialField<T>, power: T) -> Result<T> {
    let grid = f.grid();
    let n = grid.dim();
    let nf = T::from_u32(n).unwrap();
    let powered = f.powf(power);
    let body = grid.integrate(powered.values());
    let inner = powered.values()[0] * grid.r_min().powf(nf) / nf;
    let tail = match f.tail() {
        None => T::zero(),
        Some(t) => {
            let t = t.pow(power);
            if !(t.exponent > nf) {
                return Err(Error::DivergentIntegral {
                    exponent: t.exponent.as_f64(),
                    dim: n,
                });
            }
            let r_max = grid.r_max();
            let far = exp_log_tail(
                (t.exponent - nf).as_f64(),
                t.log_power.as_f64(),
                r_max.ln().as_f64(),
                0.0,
            );
            *powered.values().last().unwrap() * r_max.powf(nf) * T::lit(far)
        }
    };
    Ok(sphere_area::<T>(n) * (body + inner + tail))
}

/// Observed versus predicted far-field limit of `f(r) r^{rate} / (ln r)^{log}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", bound = "T: Real")]
pub struct LimitCheck<T> {
    pub predicted: T,
    pub observed_mean: T,
    /// Largest `|observed - predicted| / predicted` over the window.
    pub max_deviation: T,
    pub window_lo: T,
    pub window_hi: T,
    pub passed: bool,
}

fn limit_check<T: Real>(f: &RadialField<T>, rate: T, log_power: bool, predicted: T, window: (T, T)) -> Result<LimitCheck<T>> {
    let grid = f.grid();
    let idx = window_indices(grid, window.0, window.1);
    if idx.is_empty() {
        return Err(Error::Validation("limit window holds no nodes".into()));
    }
    if log_power && grid.nodes()[idx[0]] <= T::one() {
        return Err(Error::Validation("log-corrected limit needs a window beyond r = 1".into()));
    }
    let mut sum = T::zero();
    let mut worst = T::zero();
    for &i in &idx {
        let r = grid.nodes()[i];
        let mut observed = f.values()[i] * r.powf(rate);
        if log_power {
            observed = observed / r.ln();
        }
        sum = sum + observed;
        worst = worst.max(((observed - predicted) / predicted).abs());
    }
    Ok(LimitCheck {
        predicted,
        observed_mean: sum / T::from_usize_lossy(idx.len()),
        max_deviation: worst,
        window_lo: grid.nodes()[idx[0]],
        window_hi: grid.nodes()[*idx.last().unwrap()],
        passed: worst <= T::lit(RATE_TOL),
    })
}

/// Far-field amplitude of `u`: `B0 = kappa |S^{n-1}| int v^q`.
pub fn limit_b0<T: Real>(v: &RadialField<T>, params: &Params<T>, normalization: Normalization) -> Result<T> {
    Ok(normalization.constant(params.n, params.alpha) * field_integral(v, params.q)?)
}

/// Compares `u r^{n-alpha}` with `b0` over `window`.
pub fn check_u_limit<T: Real>(u: &RadialField<T>, params: &Params<T>, b0: T, window: (T, T)) -> Result<LimitCheck<T>> {
    limit_check(u, params.dim() - params.alpha, false, b0, window)
}

/// Far-field check of `v` for the given branch, where `b0` is the limit of
/// `u r^{n-alpha}`:
///
/// - `Pure`: `v r^{n-alpha} -> kappa |S^{n-1}| int u^p`;
/// - `LogCorrected`: `v r^{n-alpha} / ln r -> kappa b0^p |S^{n-1}|`;
/// - `Weakened`: `v r^{pn-(p+1)alpha} -> kappa b0^p c(n, alpha, (n-alpha)p)`.
///
/// Asking for a branch other than the one the exponents select is a
/// precondition error.
pub fn check_v_limit<T: Real>(
    u: &RadialField<T>,
    v: &RadialField<T>,
    params: &Params<T>,
    normalization: Normalization,
    case: VFastCase,
    b0: T,
    window: (T, T),
) -> Result<LimitCheck<T>> {
    let report = classify(params);
    if report.v_fast_case != case {
        return Err(Error::Precondition(format!(
            "{case:?} limit requested but the exponents select {:?}",
            report.v_fast_case
        )));
    }
    let (n, alpha, p) = (params.n, params.alpha, params.p);
    let nf = params.dim();
    let kappa = normalization.constant(n, alpha);
    match case {
        VFastCase::Pure => {
            let b1 = kappa * field_integral(u, p)?;
            limit_check(v, nf - alpha, false, b1, window)
        }
        VFastCase::LogCorrected => {
            let predicted = kappa * b0.powf(p) * sphere_area::<T>(n);
            limit_check(v, nf - alpha, true, predicted, window)
        }
        VFastCase::Weakened => {
            let b3 = kappa * b0.powf(p) * power_law_constant(n, alpha, (nf - alpha) * p)?;
            limit_check(v, report.fast_rate_v, false, b3, window)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", bound = "T: Real")]
pub struct FastLimitReport<T> {
    pub b0: T,
    pub fit_u: DecayFit<T>,
    pub v_case: VFastCase,
    pub u_limit: LimitCheck<T>,
    pub v_limit: LimitCheck<T>,
}

/// Limit checks of a fast-decaying pair on the default window. The pair's
/// fitted `u` exponent must be within 10% of `n - alpha`.
pub fn check_fast_limits<T: Real>(pair: &SolutionPair<T>) -> Result<FastLimitReport<T>> {
    let params = &pair.params;
    let report = classify(params);
    let fit_u = fit_default(&pair.u)?;
    let fast = report.fast_rate_u;
    if !((fit_u.exponent - fast).abs() <= T::lit(0.1) * fast) {
        return Err(Error::Precondition(format!(
            "pair is not fast-decaying: fitted u exponent {} vs fast rate {fast}",
            fit_u.exponent
        )));
    }
    let window = default_window(pair.grid());
    let b0 = limit_b0(&pair.v, params, pair.normalization)?;
    let u_limit = check_u_limit(&pair.u, params, b0, window)?;
    let v_limit = check_v_limit(&pair.u, &pair.v, params, pair.normalization, report.v_fast_case, b0, window)?;
    Ok(FastLimitReport {
        b0,
        fit_u,
        v_case: report.v_fast_case,
        u_limit,
        v_limit,
    })
}

/// Trace of `a_j = p b_{j-1} - alpha`, `b_j = q a_j - alpha`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RecursionTrace<S> {
    pub b0: S,
    pub alpha: S,
    pub p: S,
    pub q: S,
    pub a_seq: Vec<S>,
    pub b_seq: Vec<S>,
    /// First `j` with `b_j < 0`; iteration stops there.
    pub blowup_index: Option<usize>,
    /// Iteration stopped because `|b_j|` exceeded [`RECURSION_OVERFLOW`].
    pub overflow: bool,
}

/// Fixed point `alpha (q + 1) / (pq - 1)` of the recursion.
pub fn recursion_fixed_point<S: Num + Clone>(alpha: &S, p: &S, q: &S) -> S {
    alpha.clone() * (q.clone() + S::one()) / (p.clone() * q.clone() - S::one())
}

/// `(pq)^j (b0 - F) + F` with `F` the fixed point.
pub fn recursion_closed_form<S: Num + Clone>(b0: &S, alpha: &S, p: &S, q: &S, j: usize) -> S {
    let fixed = recursion_fixed_point(alpha, p, q);
    let pq = p.clone() * q.clone();
    let mut factor = S::one();
    for _ in 0..j {
        factor = factor * pq.clone();
    }
    factor * (b0.clone() - fixed.clone()) + fixed
}

/// Runs the recursion for at most `max_j` steps. Works in any signed number
/// type, including exact rationals.
pub fn run_recursion<S>(b0: S, alpha: S, p: S, q: S, max_j: usize) -> Result<RecursionTrace<S>>
where
    S: Num + Signed + Clone + PartialOrd + ToPrimitive,
{
    if max_j < 1 {
        return Err(Error::Validation("maxJ must be at least 1".into()));
    }
    if !(alpha > S::zero()) {
        return Err(Error::Validation("alpha must be positive".into()));
    }
    if !(p.clone() * q.clone() > S::one()) {
        return Err(Error::Validation("pq must exceed 1".into()));
    }
    let mut trace = RecursionTrace {
        b0: b0.clone(),
        alpha: alpha.clone(),
        p: p.clone(),
        q: q.clone(),
        a_seq: Vec::new(),
        b_seq: Vec::new(),
        blowup_index: None,
        overflow: false,
    };
    let mut b = b0;
    for j in 1..=max_j {
        let a = p.clone() * b - alpha.clone();
        b = q.clone() * a.clone() - alpha.clone();
        trace.a_seq.push(a);
        trace.b_seq.push(b.clone());
        if b.is_negative() {
            trace.blowup_index = Some(j);
            break;
        }
        if b.abs().to_f64().is_none_or(|x| x > RECURSION_OVERFLOW) {
            trace.overflow = true;
            break;
        }
    }
    Ok(trace)
}

/// `epsilon_0 = min_s f(s) / max_{t >= s} f(t)` over the nodes; equals 1
/// exactly when `f` is nonincreasing.
pub fn monotonicity_criterion<T: Real>(f: &RadialField<T>) -> T {
    let mut suffix_max = T::zero();
    let mut eps = T::one();
    for &value in f.values().iter().rev() {
        suffix_max = suffix_max.max(value);
        if suffix_max > T::zero() {
            eps = eps.min(value / suffix_max);
        }
    }
    eps
}

/// One named pass/fail item of an envelope report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", bound = "T: Real")]
pub struct EnvelopeItem<T> {
    pub key: String,
    pub value: T,
    pub bound: T,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", bound = "T: Real")]
pub struct EnvelopeReport<T> {
    pub fit_u: DecayFit<T>,
    pub fit_v: DecayFit<T>,
    pub integrable_u: bool,
    pub integrable_v: bool,
    pub epsilon0_u: T,
    pub epsilon0_v: T,
    pub monotone: bool,
    pub items: Vec<EnvelopeItem<T>>,
    /// Set when a fit has `r2` below [`R2_FLAG`]; rates may hold only along subsequences.
    pub low_r2: bool,
}

impl<T: Real> EnvelopeReport<T> {
    pub fn passed(&self) -> bool {
        self.items.iter().all(|i| i.passed)
    }
}

fn lower_envelope<T: Real>(f: &RadialField<T>, rate: T, window: (T, T)) -> T {
    let grid = f.grid();
    let idx = window_indices(grid, window.0, window.1);
    let scaled: Vec<T> = idx.iter().map(|&i| f.values()[i] * grid.nodes()[i].powf(rate)).collect();
    let min = scaled.iter().copied().fold(T::infinity(), T::min);
    min / scaled[0]
}

/// Rate envelope of a pair on the default window: fitted exponents at most
/// the fast rates, scaled profiles `u r^{n-alpha}` and
/// `v r^{min(n-alpha, pn-(p+1)alpha)}` bounded below, exponents at least the
/// slow rates for monotone pairs, and pinned to the slow rates for
/// non-integrable supercritical pairs. All with tolerance [`RATE_TOL`].
pub fn envelope_check<T: Real>(pair: &SolutionPair<T>, report: &RegimeReport<T>) -> Result<EnvelopeReport<T>> {
    let params = &pair.params;
    let n = params.n;
    let fit_u = fit_default(&pair.u)?;
    let fit_v = fit_default(&pair.v)?;
    envelope_from_fits(pair, report, n, fit_u, fit_v)
}

/// [`envelope_check`] with precomputed fits.
pub fn envelope_from_fits<T: Real>(
    pair: &SolutionPair<T>,
    report: &RegimeReport<T>,
    n: u32,
    fit_u: DecayFit<T>,
    fit_v: DecayFit<T>,
) -> Result<EnvelopeReport<T>> {
    let tol = T::lit(RATE_TOL);
    let up = T::one() + tol;
    let down = T::one() - tol;
    let params = &pair.params;
    let window = (fit_u.window_lo, fit_u.window_hi);
    let integrable_u = integrability_predicate(&fit_u, report, n, Role::U);
    let integrable_v = integrability_predicate(&fit_v, report, n, Role::V);
    let epsilon0_u = monotonicity_criterion(&pair.u);
    let epsilon0_v = monotonicity_criterion(&pair.v);
    let monotone = epsilon0_u.min(epsilon0_v) >= T::lit(MONOTONE_EPS0);
    let mut items = Vec::new();
    let mut push = |key: &str, value: T, bound: T, passed: bool| {
        items.push(EnvelopeItem {
            key: key.to_string(),
            value,
            bound,
            passed,
        })
    };

    push("thm1.1-fast-u", fit_u.exponent, report.fast_rate_u * up, fit_u.exponent <= report.fast_rate_u * up);
    push("thm1.1-fast-v", fit_v.exponent, report.fast_rate_v * up, fit_v.exponent <= report.fast_rate_v * up);

    let floor = T::lit(LOWER_ENVELOPE_RATIO);
    let nf = params.dim();
    let lower_u = lower_envelope(&pair.u, nf - params.alpha, window);
    push("prop5.1-lower-u", lower_u, floor, lower_u >= floor);
    let v_rate = (nf - params.alpha).min(params.p * nf - (params.p + T::one()) * params.alpha);
    let lower_v = lower_envelope(&pair.v, v_rate, window);
    push("prop5.1-lower-v", lower_v, floor, lower_v >= floor);

    if monotone {
        let (su, sv) = (report.slow_rate_u * down, report.slow_rate_v * down);
        push("thm1.1-slow-u", fit_u.exponent, su, fit_u.exponent >= su);
        push("thm1.1-slow-v", fit_v.exponent, sv, fit_v.exponent >= sv);
    }
    let supercritical = report.regime == Regime::Supercritical;
    for (role, fit, integrable, slow) in [
        ("u", &fit_u, integrable_u, report.slow_rate_u),
        ("v", &fit_v, integrable_v, report.slow_rate_v),
    ] {
        if integrable {
            continue;
        }
        push(&format!("thm1.3-slow-upper-{role}"), fit.exponent, slow * up, fit.exponent <= slow * up);
        if supercritical {
            push(&format!("thm1.4-slow-lower-{role}"), fit.exponent, slow * down, fit.exponent >= slow * down);
        }
    }

    let flag = T::lit(R2_FLAG);
    Ok(EnvelopeReport {
        low_r2: fit_u.r2 < flag || fit_v.r2 < flag,
        fit_u,
        fit_v,
        integrable_u,
        integrable_v,
        epsilon0_u,
        epsilon0_v,
        monotone,
        items,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn grid(lo: f64, hi: f64, count: usize) -> Arc<RadialGrid<f64>> {
        Arc::new(RadialGrid::log(4, lo, hi, count).unwrap())
    }

    #[test]
    fn pure_power_fit_is_exact() {
        let g = grid(1e-2, 1e4, 200);
        let f = RadialField::from_fn(g, None, |r| r.powf(-3.0)).unwrap();
        let fit = fit_tail(&f, 10.0, 1e4).unwrap();
        assert!((fit.exponent - 3.0).abs() < 1e-10);
        assert_eq!(fit.log_power, 0);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn log_power_fit_is_exact() {
        let g = grid(1.0, 1e4, 200);
        let f = RadialField::from_fn(g, None, |r| r.powi(-2) * r.ln().max(1e-300)).unwrap();
        let fit = fit_tail(&f, 1e2, 1e4).unwrap();
        assert!((fit.exponent - 2.0).abs() < 1e-10, "{fit:?}");
        assert_eq!(fit.log_power, 1);
    }

    #[test]
    fn amplitude_recovered() {
        let g = grid(1e-2, 1e4, 200);
        let f = RadialField::from_fn(g, None, |r| 2f64.sqrt() / r).unwrap();
        let fit = fit_default(&f).unwrap();
        assert!((fit.exponent - 1.0).abs() < 1e-10);
        assert!((fit.amplitude - 2f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn short_window_rejected() {
        let g = grid(1e-2, 1e4, 64);
        let f = RadialField::from_fn(g, None, |r| 1.0 / r).unwrap();
        assert!(matches!(fit_tail(&f, 1e3, 1.2e3), Err(Error::Validation(_))));
        assert!(matches!(fit_tail(&f, 1e3, 1e2), Err(Error::Validation(_))));
    }

    #[test]
    fn default_window_spans_outer_decade() {
        let g = grid(1e-4, 1e4, 512);
        let (lo, hi) = default_window(&g);
        assert!((hi / lo - 10.0).abs() < 1e-9);
        assert_eq!(hi, g.nodes()[459]);
    }

    #[test]
    fn recursion_hand_example() {
        let t = run_recursion(1.0, 2.0, 2.0, 2.0, 10).unwrap();
        assert_eq!(t.a_seq, vec![0.0]);
        assert_eq!(t.b_seq, vec![-2.0]);
        assert_eq!(t.blowup_index, Some(1));
        assert_eq!(recursion_closed_form(&1.0, &2.0, &2.0, &2.0, 1), -2.0);
    }

    #[test]
    fn recursion_fixed_point_is_stationary() {
        let f = recursion_fixed_point(&2.0, &2.0, &3.0);
        let t = run_recursion(f, 2.0, 2.0, 3.0, 8).unwrap();
        assert!(t.blowup_index.is_none());
        assert!(t.b_seq.iter().all(|b| (b - f).abs() < 1e-9));
    }

    #[test]
    fn recursion_overflow_guard() {
        let t = run_recursion(5.0, 1.0, 3.0, 3.0, 1000).unwrap();
        assert!(t.overflow);
        assert!(t.blowup_index.is_none());
        assert!(t.b_seq.len() < 1000);
    }

    #[test]
    fn recursion_validates() {
        assert!(run_recursion(1.0, 2.0, 0.5, 1.5, 3).is_err());
        assert!(run_recursion(1.0, -2.0, 2.0, 2.0, 3).is_err());
        assert!(run_recursion(1.0, 2.0, 2.0, 2.0, 0).is_err());
    }

    #[test]
    fn epsilon0_examples() {
        let g = grid(1e-2, 1e2, 40);
        let f = RadialField::from_fn(g.clone(), None, |r| 1.0 / (1.0 + r)).unwrap();
        assert_eq!(monotonicity_criterion(&f), 1.0);
        let bump = RadialField::from_fn(g, None, |r| if (0.5..2.0).contains(&r) { 2.0 } else if r < 0.5 { 1.0 } else { 0.1 }).unwrap();
        assert_eq!(monotonicity_criterion(&bump), 0.5);
    }

    #[test]
    fn field_integral_of_bubble() {
        // |S^3| int s^3 / (1 + s^2/8)^3 ds = 2 pi^2 * 16
        let want = 32.0 * std::f64::consts::PI.powi(2);
        let err = |count| {
            let g = grid(1e-4, 1e4, count);
            let f = RadialField::from_fn(g, Some(crate::riesz::TailModel::power(2.0)), |r| 1.0 / (1.0 + r * r / 8.0)).unwrap();
            ((field_integral(&f, 3.0).unwrap() - want) / want).abs()
        };
        let (coarse, fine) = (err(512), err(1024));
        assert!(coarse < 1e-5, "{coarse}");
        assert!(fine < coarse / 8.0, "{coarse} {fine}");
        let f = RadialField::from_fn(grid(1e-4, 1e4, 64), Some(crate::riesz::TailModel::power(2.0)), |r| 1.0 / r).unwrap();
        assert!(matches!(field_integral(&f, 2.0), Err(Error::DivergentIntegral { .. })));
    }
}
