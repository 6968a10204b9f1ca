//! Adaptive Gauss-Kronrod and fixed Gauss-Legendre rules.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::real::Real;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Quad<T> {
    pub value: T,
    pub error: T,
    pub evals: usize,
}

/// Tolerances and budget for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_evals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 0.0,
            rel_tol: 1e-10,
            max_evals: 1_000_000,
        }
    }
}

impl QuadOptions {
    pub fn rel(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }
}

fn gk15<T: Real, F: FnMut(T) -> T>(f: &mut F, a: T, b: T) -> (T, T) {
    let half = T::lit(0.5);
    let center = half * (a + b);
    let half_len = half * (b - a);
    let fc = f(center);
    let mut kronrod = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    for (k, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half_len * T::lit(x);
        let fsum = f(center - dx) + f(center + dx);
        kronrod = kronrod + T::lit(w) * fsum;
        if k % 2 == 1 {
            gauss = gauss + T::lit(WG[k / 2]) * fsum;
        }
    }
    let value = kronrod * half_len;
    let error = ((kronrod - gauss) * half_len).abs();
    (value, error)
}

struct Segment<T> {
    a: T,
    b: T,
    value: T,
    error: T,
}

impl<T: Real> PartialEq for Segment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<T: Real> Eq for Segment<T> {}
impl<T: Real> PartialOrd for Segment<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Real> Ord for Segment<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.partial_cmp(&other.error).unwrap_or(Ordering::Equal)
    }
}

/// Globally adaptive Gauss-Kronrod (7/15) integration over the consecutive
/// intervals of `breakpoints`. The largest-error segment is bisected until the
/// summed error estimate meets `max(abs_tol, rel_tol * |value|)`.
pub fn integrate<T: Real, F: FnMut(T) -> T>(
    mut f: F,
    breakpoints: &[T],
    opts: QuadOptions,
) -> Result<Quad<T>> {
    assert!(breakpoints.len() >= 2, "need at least one interval");
    let mut heap = BinaryHeap::new();
    let mut evals = 0usize;
    let mut total = T::zero();
    let mut total_err = T::zero();
    for w in breakpoints.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a == b {
            continue;
        }
        let (value, error) = gk15(&mut f, a, b);
        evals += 15;
        total = total + value;
        total_err = total_err + error;
        heap.push(Segment { a, b, value, error });
    }
    let abs_tol = T::lit(opts.abs_tol);
    let rel_tol = T::tol_floor(opts.rel_tol);
    loop {
        if !total.is_finite() || !total_err.is_finite() {
            return Err(Error::Quadrature {
                tol: opts.rel_tol,
                error: total_err.as_f64(),
                evals,
            });
        }
        let target = abs_tol.max(rel_tol * total.abs());
        if total_err <= target {
            break;
        }
        if evals + 30 > opts.max_evals {
            return Err(Error::Quadrature {
                tol: opts.rel_tol,
                error: total_err.as_f64(),
                evals,
            });
        }
        let Some(seg) = heap.pop() else { break };
        let mid = T::lit(0.5) * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            // Interval exhausted at machine resolution; keep its estimate.
            heap.push(Segment { error: T::zero(), ..seg });
            total_err = heap.iter().map(|s| s.error).sum();
            if total_err <= target {
                break;
            }
            continue;
        }
        let (v1, e1) = gk15(&mut f, seg.a, mid);
        let (v2, e2) = gk15(&mut f, mid, seg.b);
        evals += 30;
        total = total - seg.value + v1 + v2;
        total_err = total_err - seg.error + e1 + e2;
        heap.push(Segment { a: seg.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: seg.b, value: v2, error: e2 });
    }
    // Re-sum to shed accumulated cancellation from the running updates.
    let value: T = heap.iter().map(|s| s.value).sum();
    let error: T = heap.iter().map(|s| s.error).sum();
    Ok(Quad { value, error, evals })
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Real> GaussLegendre<T> {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1);
        let mut nodes = vec![T::zero(); order];
        let mut weights = vec![T::zero(); order];
        let nf = order as f64;
        for i in 0..order.div_ceil(2) {
            // Newton on P_n starting from the Chebyshev-like guess; done in f64.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0_f64, x);
                for k in 2..=order {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                let pn = if order == 1 { x } else { p1 };
                let pm = if order == 1 { 1.0 } else { p0 };
                dp = nf * (x * pn - pm) / (x * x - 1.0);
                let dx = pn / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = T::lit(-x);
            nodes[order - 1 - i] = T::lit(x);
            weights[i] = T::lit(w);
            weights[order - 1 - i] = T::lit(w);
        }
        if order % 2 == 1 {
            nodes[order / 2] = T::zero();
        }
        Self { nodes, weights }
    }

    /// Applies the rule on `[a, b]`.
    pub fn integrate<F: FnMut(T) -> T>(&self, mut f: F, a: T, b: T) -> T {
        let half = T::lit(0.5) * (b - a);
        let mid = T::lit(0.5) * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<T>()
            * half
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: T, b: T) -> impl Iterator<Item = (T, T)> + '_ {
        let half = T::lit(0.5) * (b - a);
        let mid = T::lit(0.5) * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, w * half))
    }
}


/// `int_start^inf e^{-mu s} (1 + s / scale)^lambda ds` for `mu > 0`, `lambda >= 0`, `scale > 0`.
pub fn exp_log_tail(mu: f64, lambda: f64, scale: f64, start: f64) -> f64 {
    if lambda == 0.0 {
        return (-mu * start).exp() / mu;
    }
    use statrs::function::gamma::{gamma, gamma_ur};
    // Substituting y = scale + s turns the integral into an upper incomplete gamma.
    let upper = gamma_ur(lambda + 1.0, mu * (scale + start)) * gamma(lambda + 1.0);
    scale.powf(-lambda) * (mu * scale).exp() * mu.powf(-lambda - 1.0) * upper
}
