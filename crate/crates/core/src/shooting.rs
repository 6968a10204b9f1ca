//! Shooting for radial ground states of the second-order Lane-Emden system
//! `u'' + (n-1)/r u' = -v^q`, `v'' + (n-1)/r v' = -u^p` (the `alpha = 2` case).

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::decay::fit_tail;
use crate::error::{Error, Result};
use crate::exponents::Params;
use crate::real::Real;
use crate::riesz::{Normalization, RadialField, RadialGrid, TailModel};
use crate::solver::{Branch, SolutionPair};

/// Shortest span, in decades from `r_start`, accepted by [`trajectory_pair`].
pub const MIN_PAIR_DECADES: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", bound = "T: Real")]
pub struct ShotConfig<T> {
    pub u0: T,
    /// `v(0)`, the shooting parameter.
    pub xi: T,
    pub r_start: T,
    pub r_end: T,
    pub rtol: T,
    pub atol: T,
    pub samples_per_decade: usize,
}

impl<T: Real> Default for ShotConfig<T> {
    fn default() -> Self {
        Self {
            u0: T::one(),
            xi: T::one(),
            r_start: T::lit(1e-6),
            r_end: T::lit(1e6),
            rtol: T::tol_floor(1e-11),
            atol: T::tol_floor(1e-16),
            samples_per_decade: 40,
        }
    }
}

impl<T: Real> ShotConfig<T> {
    pub fn with_xi(mut self, xi: T) -> Self {
        self.xi = xi;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.u0 > T::zero() && self.u0.is_finite()) || !(self.xi > T::zero() && self.xi.is_finite()) {
            return Err(Error::Validation(format!(
                "initial values u0 = {}, xi = {} must be positive",
                self.u0, self.xi
            )));
        }
        if !(self.r_start > T::zero() && self.r_start < T::lit(0.01)) {
            return Err(Error::Validation(format!("rStart = {} must lie in (0, 0.01)", self.r_start)));
        }
        if !(self.r_end >= T::lit(1e4) * self.r_start) || !self.r_end.is_finite() {
            return Err(Error::Validation(format!(
                "rEnd = {} must be at least 1e4 * rStart",
                self.r_end
            )));
        }
        if !(self.rtol > T::zero() && self.atol > T::zero()) {
            return Err(Error::Validation("integrator tolerances must be positive".into()));
        }
        if self.samples_per_decade < 2 {
            return Err(Error::Validation("need at least 2 samples per decade".into()));
        }
        Ok(())
    }

    /// Log grid of sample radii from `r_start` to `r_end`.
    pub fn sample_grid(&self, n: u32) -> Result<RadialGrid<T>> {
        let decades = (self.r_end / self.r_start).log10().as_f64();
        let count = (decades * self.samples_per_decade as f64).round() as usize + 1;
        RadialGrid::log(n, self.r_start, self.r_end, count.max(16))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", bound = "T: Real")]
pub struct Sample<T> {
    pub r: T,
    pub u: T,
    pub du: T,
    pub v: T,
    pub dv: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    UCrossedZero,
    VCrossedZero,
    Decaying,
    Inconclusive,
}

impl Outcome {
    pub fn is_crossing(self) -> bool {
        matches!(self, Outcome::UCrossedZero | Outcome::VCrossedZero)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", bound = "T: Real")]
pub struct Trajectory<T> {
    pub xi: T,
    pub samples: Vec<Sample<T>>,
    pub outcome: Outcome,
    pub crossing_radius: Option<T>,
    pub steps: usize,
}

impl<T: Real> Trajectory<T> {
    /// Radius reached: the crossing radius, or the last sample.
    pub fn reach(&self) -> T {
        self.crossing_radius.unwrap_or_else(|| self.samples.last().map_or(T::zero(), |s| s.r))
    }
}

type State<T> = [T; 4];

fn axpy<T: Real>(y: &State<T>, h: T, terms: &[(T, &State<T>)]) -> State<T> {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = T::zero();
        for (c, k) in terms {
            acc = acc + *c * k[i];
        }
        *o = *o + h * acc;
    }
    out
}

/// Radial system in `r` with a source `(s_u, s_v)` replacing `(v^q, u^p)`.
struct Radial<F> {
    dim_minus_one: f64,
    source: F,
}

impl<F> Radial<F> {
    fn rhs<T: Real>(&self, r: T, y: &State<T>) -> State<T>
    where
        F: Fn(T, T) -> (T, T),
    {
        let (su, sv) = (self.source)(y[0], y[2]);
        let c = T::lit(self.dim_minus_one) / r;
        [y[1], -c * y[1] - su, y[3], -c * y[3] - sv]
    }
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B_LOW: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// One Dormand-Prince step; returns the fifth-order solution and the error estimate.
fn dopri_step<T: Real, F: Fn(T, T) -> (T, T)>(sys: &Radial<F>, r: T, y: &State<T>, h: T) -> (State<T>, State<T>) {
    let mut k: Vec<State<T>> = Vec::with_capacity(7);
    for stage in 0..7 {
        let terms: Vec<(T, &State<T>)> = (0..stage).map(|j| (T::lit(A[stage][j]), &k[j])).collect();
        let ys = axpy(y, h, &terms);
        k.push(sys.rhs(r + T::lit(C[stage]) * h, &ys));
    }
    let high = axpy(y, h, &(0..6).map(|j| (T::lit(A[6][j]), &k[j])).collect::<Vec<_>>());
    let low = axpy(y, h, &(0..7).map(|j| (T::lit(B_LOW[j]), &k[j])).collect::<Vec<_>>());
    let mut err = [T::zero(); 4];
    for i in 0..4 {
        err[i] = high[i] - low[i];
    }
    (high, err)
}

fn series_start<T: Real>(n: u32, r: T, u0: T, xi: T, su: T, sv: T) -> State<T> {
    let two_n = T::lit(2.0 * n as f64);
    let nf = T::from_u32(n).unwrap();
    [u0 - su * r * r / two_n, -su * r / nf, xi - sv * r * r / two_n, -sv * r / nf]
}

fn positive_pow<T: Real>(x: T, e: T) -> T {
    if x > T::zero() {
        x.powf(e)
    } else {
        T::zero()
    }
}

/// Integrates the radial system with the given source from the series start
/// at `r_start`, sampling at the nodes of [`ShotConfig::sample_grid`] and
/// stopping at the first zero of `u` or `v`.
pub fn integrate_radial<T: Real>(n: u32, cfg: &ShotConfig<T>, source: impl Fn(T, T) -> (T, T)) -> Result<Trajectory<T>> {
    cfg.validate()?;
    let sys = Radial {
        dim_minus_one: (n - 1) as f64,
        source,
    };
    let grid = cfg.sample_grid(n)?;
    let nodes = grid.nodes();
    let (su0, sv0) = (sys.source)(cfg.u0, cfg.xi);
    let mut r = nodes[0];
    let mut y = series_start(n, r, cfg.u0, cfg.xi, su0, sv0);
    let mut samples = vec![Sample {
        r,
        u: y[0],
        du: y[1],
        v: y[2],
        dv: y[3],
    }];
    let mut h = r * T::lit(1e-3);
    let mut steps = 0usize;
    let mut next = 1usize;
    let safety = T::lit(0.9);
    let fifth = T::lit(0.2);

    while next < nodes.len() {
        let target = nodes[next];
        let h_try = h.min(target - r);
        let (y_new, err) = dopri_step(&sys, r, &y, h_try);
        if y_new.iter().any(|x| !x.is_finite()) {
            if h_try < r * T::lit(1e-14) {
                return Err(Error::NonFinite { last_good: r.as_f64() });
            }
            h = h_try * T::lit(0.25);
            continue;
        }
        let mut norm = T::zero();
        for i in 0..4 {
            let scale = cfg.atol + cfg.rtol * y[i].abs().max(y_new[i].abs());
            norm = norm.max((err[i] / scale).abs());
        }
        if norm > T::one() {
            h = h_try * (safety * norm.powf(-fifth)).max(T::lit(0.1));
            if h < r * T::epsilon() * T::lit(16.0) {
                return Err(Error::StepUnderflow { radius: r.as_f64() });
            }
            continue;
        }
        steps += 1;
        if y_new[0] <= T::zero() || y_new[2] <= T::zero() {
            return Ok(finish_crossing(&sys, r, &y, h_try, cfg.xi, samples, steps));
        }
        let landed = h_try == target - r;
        r = if landed { target } else { r + h_try };
        y = y_new;
        let grow = if norm > T::zero() {
            (safety * norm.powf(-fifth)).min(T::lit(5.0))
        } else {
            T::lit(5.0)
        };
        if landed {
            samples.push(Sample {
                r,
                u: y[0],
                du: y[1],
                v: y[2],
                dv: y[3],
            });
            next += 1;
            h = h.max(h_try * grow);
        } else {
            h = h_try * grow;
        }
    }

    let outcome = if final_decade_decays(&grid, &samples) {
        Outcome::Decaying
    } else {
        Outcome::Inconclusive
    };
    Ok(Trajectory {
        xi: cfg.xi,
        samples,
        outcome,
        crossing_radius: None,
        steps,
    })
}

fn finish_crossing<T: Real, F: Fn(T, T) -> (T, T)>(
    sys: &Radial<F>,
    r: T,
    y: &State<T>,
    h: T,
    xi: T,
    samples: Vec<Sample<T>>,
    steps: usize,
) -> Trajectory<T> {
    // Bisect the step length for the first sign change of u or v.
    let (mut lo, mut hi) = (T::zero(), h);
    for _ in 0..200 {
        let mid = T::lit(0.5) * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (ym, _) = dopri_step(sys, r, y, mid);
        if ym[0] <= T::zero() || ym[2] <= T::zero() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let (yh, _) = dopri_step(sys, r, y, hi);
    let which = if yh[0] <= T::zero() {
        Outcome::UCrossedZero
    } else {
        Outcome::VCrossedZero
    };
    Trajectory {
        xi,
        samples,
        outcome: which,
        crossing_radius: Some(r + hi),
        steps,
    }
}

fn final_decade_decays<T: Real>(grid: &RadialGrid<T>, samples: &[Sample<T>]) -> bool {
    let hi = grid.r_max();
    let lo = hi / T::lit(10.0);
    let grid = Arc::new(grid.clone());
    let field = |pick: fn(&Sample<T>) -> T| RadialField::new(grid.clone(), samples.iter().map(pick).collect(), None);
    let slope = |pick: fn(&Sample<T>) -> T| field(pick).and_then(|f| fit_tail(&f, lo, hi)).map(|fit| fit.exponent);
    matches!((slope(|s| s.u), slope(|s| s.v)), (Ok(a), Ok(b)) if a > T::zero() && b > T::zero())
}

fn check_params<T: Real>(params: &Params<T>) -> Result<()> {
    if (params.alpha - T::lit(2.0)).abs() > T::lit(1e-12) {
        return Err(Error::Validation(format!(
            "shooting integrates the second-order system and needs alpha = 2, got {}",
            params.alpha
        )));
    }
    Ok(())
}

/// Shoots `u(0) = u0`, `v(0) = xi` for the Lane-Emden system of `params`.
pub fn shoot<T: Real>(params: &Params<T>, cfg: &ShotConfig<T>) -> Result<Trajectory<T>> {
    check_params(params)?;
    let (p, q) = (params.p, params.q);
    integrate_radial(params.n, cfg, |u, v| (positive_pow(v, q), positive_pow(u, p)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", bound = "T: Real")]
pub struct BisectResult<T> {
    /// Midpoint of the final bracket.
    pub xi: T,
    pub lo: T,
    pub hi: T,
    pub outcome_lo: Outcome,
    pub outcome_hi: Outcome,
    pub iterations: usize,
    /// Trajectory reaching farthest among the final bracket ends and midpoint.
    pub trajectory: Trajectory<T>,
}

/// Bisects on `xi` between shots with different outcomes, at least one of
/// which crosses zero. The bracket end sharing the midpoint's outcome moves.
pub fn bisect_ground_state<T: Real>(params: &Params<T>, lo: T, hi: T, iters: usize, cfg: &ShotConfig<T>) -> Result<BisectResult<T>> {
    check_params(params)?;
    if !(lo > T::zero() && hi > lo) {
        return Err(Error::InvalidBracket(format!("need 0 < lo < hi, got [{lo}, {hi}]")));
    }
    let mut t_lo = shoot(params, &cfg.with_xi(lo))?;
    let mut t_hi = shoot(params, &cfg.with_xi(hi))?;
    if t_lo.outcome == t_hi.outcome || !(t_lo.outcome.is_crossing() || t_hi.outcome.is_crossing()) {
        return Err(Error::InvalidBracket(format!(
            "endpoints do not separate outcomes: xi = {lo} gives {:?}, xi = {hi} gives {:?}",
            t_lo.outcome, t_hi.outcome
        )));
    }
    let (mut a, mut b) = (lo, hi);
    let mut done = 0;
    for _ in 0..iters {
        let mid = T::lit(0.5) * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let t_mid = shoot(params, &cfg.with_xi(mid))?;
        if t_mid.outcome == t_lo.outcome {
            a = mid;
            t_lo = t_mid;
        } else {
            b = mid;
            t_hi = t_mid;
        }
        done += 1;
    }
    let xi = T::lit(0.5) * (a + b);
    let t_mid = shoot(params, &cfg.with_xi(xi))?;
    let (outcome_lo, outcome_hi) = (t_lo.outcome, t_hi.outcome);
    let trajectory = [t_mid, t_lo, t_hi]
        .into_iter()
        .reduce(|best, t| if t.reach() > best.reach() { t } else { best })
        .unwrap();
    Ok(BisectResult {
        xi,
        lo: a,
        hi: b,
        outcome_lo,
        outcome_hi,
        iterations: done,
        trajectory,
    })
}

/// Packs a trajectory into a [`SolutionPair`] on the sample grid, with tail
/// models from the default-window fits. A trajectory that crossed zero is cut
/// at its last sample; it must still span [`MIN_PAIR_DECADES`] decades.
pub fn trajectory_pair<T: Real>(params: &Params<T>, cfg: &ShotConfig<T>, traj: &Trajectory<T>) -> Result<SolutionPair<T>> {
    let full = cfg.sample_grid(params.n)?;
    let last = traj.samples.len();
    let grid = if last == full.len() {
        Arc::new(full)
    } else {
        let r_last = full.nodes()[last - 1];
        if (r_last / cfg.r_start).log10() < T::lit(MIN_PAIR_DECADES) {
            return Err(Error::Precondition(format!(
                "trajectory stopped at r = {:e}, spanning fewer than {MIN_PAIR_DECADES} decades",
                traj.reach()
            )));
        }
        Arc::new(RadialGrid::log(params.n, cfg.r_start, r_last, last)?)
    };
    let mut u = RadialField::new(grid.clone(), traj.samples.iter().map(|s| s.u).collect(), None)?;
    let mut v = RadialField::new(grid.clone(), traj.samples.iter().map(|s| s.v).collect(), None)?;
    for f in [&mut u, &mut v] {
        let fit = crate::decay::fit_default(f)?;
        if fit.exponent > T::zero() {
            f.set_tail(Some(TailModel::with_log(fit.exponent, T::from_u8(fit.log_power).unwrap())));
        }
    }
    Ok(SolutionPair {
        u,
        v,
        params: *params,
        normalization: Normalization::Laplacian,
        iterations: traj.steps,
        residual_u: None,
        residual_v: None,
        branch: Branch::Shooting,
    })
}
