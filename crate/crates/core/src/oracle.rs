//! Reference computations that share no code path with the production
//! discretization: closed forms, series, Monte Carlo and fixed-step
//! integrators. Used by tests and the acceptance checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use rayon::prelude::*;
use statrs::function::gamma::{gamma, ln_gamma};

use crate::quadrature::{integrate, QuadOptions};
use crate::real::sphere_area;
use crate::riesz::angular_kernel;

/// `int_{R^n} |z|^{-beta} |e - z|^{alpha - n} dz` in closed form.
pub fn power_law_closed_form(n: u32, alpha: f64, beta: f64) -> f64 {
    let nf = n as f64;
    std::f64::consts::PI.powf(nf / 2.0) * gamma(alpha / 2.0) * gamma((nf - beta) / 2.0) * gamma((beta - alpha) / 2.0)
        / (gamma((nf - alpha) / 2.0) * gamma(beta / 2.0) * gamma((nf + alpha - beta) / 2.0))
}

/// Radial kernel from the Gauss series
/// `|S^{n-1}| max^{alpha-n} 2F1((n-alpha)/2, 1-alpha/2; n/2; (min/max)^2)`.
/// Returns `None` when the ratio is too close to 1 for the plain series.
pub fn hypergeometric_kernel(r: f64, s: f64, n: u32, alpha: f64) -> Option<f64> {
    let (lo, hi) = if r < s { (r, s) } else { (s, r) };
    let x = (lo / hi).powi(2);
    if x > 0.9 {
        return None;
    }
    let nf = n as f64;
    let (a, b, c) = ((nf - alpha) / 2.0, 1.0 - alpha / 2.0, nf / 2.0);
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 0..100_000 {
        let kf = k as f64;
        term *= (a + kf) * (b + kf) / ((c + kf) * (kf + 1.0)) * x;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    Some(sphere_area::<f64>(n) * hi.powf(alpha - nf) * sum)
}

/// `int_0^inf K(r, s) s^{n-1-beta} ds` by nested adaptive quadrature of the
/// pointwise angular kernel, with the far field `|S^{n-1}| s^{alpha-n}` summed
/// analytically beyond `1e4 r`. Needs `alpha > 1` and `alpha < beta < n`.
pub fn reduced_power_law(n: u32, alpha: f64, beta: f64, r: f64) -> crate::Result<f64> {
    let nf = n as f64;
    let far = 1e4 * r;
    let mut breaks: Vec<f64> = (0..=60).rev().map(|k| r * 0.5f64.powi(k)).collect();
    breaks[0] = 0.0;
    breaks.extend((1..=14).map(|k| r * 2f64.powi(k)));
    breaks.push(far);
    let opts = QuadOptions::rel(1e-11);
    let mut first_error = None;
    let body = integrate(
        |s: f64| {
            if s == 0.0 {
                return 0.0;
            }
            match angular_kernel(r, s, n, alpha) {
                Ok(k) => k * s.powf(nf - 1.0 - beta),
                Err(e) => {
                    first_error.get_or_insert(e);
                    f64::NAN
                }
            }
        },
        &breaks,
        opts,
    );
    if let Some(e) = first_error {
        return Err(e);
    }
    let tail = sphere_area::<f64>(n) * far.powf(alpha - beta) / (beta - alpha);
    Ok(body?.value + tail)
}

/// Riesz power-law amplitude by importance-sampled Monte Carlo in `R^n`.
/// Returns `(estimate, standard error)`. Deterministic for a given seed.
pub fn monte_carlo_power_law(n: u32, alpha: f64, beta: f64, samples: usize, seed: u64) -> (f64, f64) {
    // Mixture of two radial laws q(z) ~ |z - c|^{-a} (1 + |z - c|)^{-b}, one
    // centred at 0 (a = beta) and one at e (a = n - alpha); both have tail
    // |z|^{-n-delta} with delta = (beta - alpha) / 2, so the weight stays bounded.
    let nf = n as f64;
    let delta = (beta - alpha) / 2.0;
    let laws = [RadialLaw::new(nf, beta, nf - beta + delta), RadialLaw::new(nf, nf - alpha, alpha + delta)];
    let integrand = |z: &[f64]| {
        let rz = norm(z);
        let re = dist_to_e(z);
        rz.powf(-beta) * re.powf(alpha - nf)
    };
    let density = |z: &[f64]| 0.5 * laws[0].density(norm(z)) + 0.5 * laws[1].density(dist_to_e(z));
    let chunks = 64usize;
    let per_chunk = samples.div_ceil(chunks);
    let (sum, sum2, count) = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (chunk as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let mut z = vec![0.0; n as usize];
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..per_chunk {
                let which = usize::from(rng.random::<bool>());
                let rho = laws[which].sample(&mut rng);
                let mut len = 0.0_f64;
                for zi in z.iter_mut() {
                    *zi = StandardNormal.sample(&mut rng);
                    len += *zi * *zi;
                }
                let scale = rho / len.sqrt();
                for zi in z.iter_mut() {
                    *zi *= scale;
                }
                if which == 1 {
                    z[0] += 1.0;
                }
                let w = integrand(&z) / density(&z);
                s += w;
                s2 += w * w;
            }
            (s, s2, per_chunk)
        })
        .reduce(|| (0.0, 0.0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    let m = count as f64;
    let mean = sum / m;
    let var = (sum2 / m - mean * mean).max(0.0);
    (mean, (var / m).sqrt())
}

fn norm(z: &[f64]) -> f64 {
    z.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dist_to_e(z: &[f64]) -> f64 {
    let mut s = (z[0] - 1.0).powi(2);
    for x in &z[1..] {
        s += x * x;
    }
    s.sqrt()
}

/// Isotropic law on `R^n` with radial density `~ rho^{n-1-a} (1 + rho)^{-b}`;
/// `rho / (1 + rho)` is then `Beta(n - a, a + b - n)`.
struct RadialLaw {
    n: f64,
    a: f64,
    b: f64,
    beta: Beta<f64>,
    log_norm: f64,
}

impl RadialLaw {
    fn new(n: f64, a: f64, b: f64) -> Self {
        let (p, q) = (n - a, a + b - n);
        let log_norm = ln_gamma(p) + ln_gamma(q) - ln_gamma(p + q);
        Self {
            n,
            a,
            b,
            beta: Beta::new(p, q).unwrap(),
            log_norm,
        }
    }

    fn sample(&self, rng: &mut impl Rng) -> f64 {
        loop {
            // t = 0 or 1 happens only by rounding; redraw.
            let t: f64 = self.beta.sample(rng);
            if t > 0.0 && t < 1.0 {
                return t / (1.0 - t);
            }
        }
    }

    /// Density in `R^n` at distance `rho` from the centre.
    fn density(&self, rho: f64) -> f64 {
        let radial = ((self.n - 1.0 - self.a) * rho.ln() - self.b * rho.ln_1p() - self.log_norm).exp();
        radial / (sphere_area::<f64>(self.n as u32) * rho.powf(self.n - 1.0))
    }
}

/// Plain Riesz potential with `n = 4`, `alpha = 2` of `(1 + s^2)^{-p}`, `p > 1`,
/// from the Newtonian shell formula
/// `|S^3| (r^{-2} int_0^r f s^3 ds + int_r^inf f s ds)` in closed form.
pub fn newtonian_r4(p: f64, r: f64) -> f64 {
    // Antiderivative of t (1 + t)^{-p} in w = 1 + t.
    let anti = |w: f64| {
        if (p - 2.0).abs() < 1e-12 {
            w.ln() + 1.0 / w
        } else {
            w.powf(2.0 - p) / (2.0 - p) - w.powf(1.0 - p) / (1.0 - p)
        }
    };
    let w = 1.0 + r * r;
    let inner = 0.5 * (anti(w) - anti(1.0)) / (r * r);
    let outer = w.powf(1.0 - p) / (2.0 * (p - 1.0));
    2.0 * std::f64::consts::PI.powi(2) * (inner + outer)
}

/// Amplitudes solving `A = c_u B^q`, `B = c_v A^p` by iterating the inverse
/// map `A <- (B / c_v)^{1/p}`, `B <- (A / c_u)^{1/q}` (a contraction with
/// factor `1/(pq)`).
pub fn amplitude_contraction(c_u: f64, c_v: f64, p: f64, q: f64) -> (f64, f64) {
    let (mut a, mut b) = (1.0, 1.0);
    for _ in 0..10_000 {
        let a_next = (b / c_v).powf(1.0 / p);
        let b_next = (a_next / c_u).powf(1.0 / q);
        let done = (a_next - a).abs() <= 1e-16 * a_next && (b_next - b).abs() <= 1e-16 * b_next;
        a = a_next;
        b = b_next;
        if done {
            break;
        }
    }
    (a, b)
}

/// `f'' + (n-1)/r f'` by central differences with step `h r`.
pub fn radial_laplacian_fd(f: impl Fn(f64) -> f64, r: f64, n: u32, h: f64) -> f64 {
    let d = h * r;
    let (fm, f0, fp) = (f(r - d), f(r), f(r + d));
    (fp - 2.0 * f0 + fm) / (d * d) + (n as f64 - 1.0) / r * (fp - fm) / (2.0 * d)
}

/// Classical RK4 for the radial Lane-Emden system in `t = ln r` with `steps`
/// equal steps from the series start at `r_start` to `r_end`.
/// Returns `(u, v)` at `r_end`, or `None` if a component turned negative.
#[allow(clippy::too_many_arguments)]
pub fn rk4_lane_emden(n: u32, p: f64, q: f64, u0: f64, xi: f64, r_start: f64, r_end: f64, steps: usize) -> Option<(f64, f64)> {
    let nf = n as f64;
    // State (u, r u', v, r v'); d/dt (r u') = r^2 u'' + r u' = -(n-2) r u' - r^2 v^q.
    let rhs = |t: f64, y: [f64; 4]| {
        let r2 = (2.0 * t).exp();
        [
            y[1],
            -(nf - 2.0) * y[1] - r2 * y[2].max(0.0).powf(q),
            y[3],
            -(nf - 2.0) * y[3] - r2 * y[0].max(0.0).powf(p),
        ]
    };
    let r = r_start;
    let (su, sv) = (xi.powf(q), u0.powf(p));
    let mut y = [
        u0 - su * r * r / (2.0 * nf),
        -su * r * r / nf,
        xi - sv * r * r / (2.0 * nf),
        -sv * r * r / nf,
    ];
    let (t0, t1) = (r_start.ln(), r_end.ln());
    let h = (t1 - t0) / steps as f64;
    let add = |y: [f64; 4], k: [f64; 4], c: f64| [y[0] + c * k[0], y[1] + c * k[1], y[2] + c * k[2], y[3] + c * k[3]];
    for i in 0..steps {
        let t = t0 + i as f64 * h;
        let k1 = rhs(t, y);
        let k2 = rhs(t + h / 2.0, add(y, k1, h / 2.0));
        let k3 = rhs(t + h / 2.0, add(y, k2, h / 2.0));
        let k4 = rhs(t + h, add(y, k3, h));
        for j in 0..4 {
            y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        if y[0] < 0.0 || y[2] < 0.0 {
            return None;
        }
    }
    Some((y[0], y[2]))
}
