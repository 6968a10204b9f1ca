//! Solutions of the radial HLS system `u = c I_a[v^q]`, `v = c I_a[u^p]`:
//! damped Picard iteration for bounded fast-decay solutions and the exact
//! scale-invariant singular pair.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::decay::{default_window, fit_tail};
use crate::error::{Error, Result};
use crate::exponents::{classify, Params};
use crate::real::Real;
use crate::riesz::{power_law_constant, KernelOperator, Normalization, RadialField, RadialGrid, TailModel};

/// Residual bound checked on every singular pair.
pub const SINGULAR_RESIDUAL_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", bound = "T: Real")]
pub struct SolveConfig<T> {
    pub damping: T,
    pub max_iters: usize,
    /// Relative sup-norm change between sweeps that counts as converged.
    pub tol: T,
    pub normalize_at_origin: bool,
    /// Largest fixed-point residual accepted at convergence.
    pub residual_tol: T,
}

impl<T: Real> Default for SolveConfig<T> {
    fn default() -> Self {
        Self {
            damping: T::lit(0.5),
            max_iters: 2000,
            tol: T::tol_floor(1e-11),
            normalize_at_origin: true,
            residual_tol: T::lit(1e-4),
        }
    }
}

impl<T: Real> SolveConfig<T> {
    fn validate(&self) -> Result<()> {
        if !(self.damping > T::zero() && self.damping <= T::one()) {
            return Err(Error::Validation(format!("damping {} outside (0, 1]", self.damping)));
        }
        if !(self.residual_tol > T::zero()) {
            return Err(Error::Validation(format!("residual tolerance {} must be positive", self.residual_tol)));
        }
        if !(self.tol > T::zero()) {
            return Err(Error::Validation(format!("tolerance {} must be positive", self.tol)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    PicardFixedPoint,
    SingularPowerLaw,
    /// Resampled ground state of the radial ODE system.
    Shooting,
}

/// A solution pair together with how it was produced. Residuals are the sup
/// over the middle half of the grid of `|u - c I[v^q]| / u` (and the same for
/// `v`); they are `None` for pairs that did not come from the integral form.
#[derive(Debug, Clone)]
pub struct SolutionPair<T> {
    pub u: RadialField<T>,
    pub v: RadialField<T>,
    pub params: Params<T>,
    pub normalization: Normalization,
    pub iterations: usize,
    pub residual_u: Option<T>,
    pub residual_v: Option<T>,
    pub branch: Branch,
}

impl<T: Real> SolutionPair<T> {
    pub fn grid(&self) -> &Arc<RadialGrid<T>> {
        self.u.grid()
    }
}

/// Fixed-point residuals of `(u, v)` for the operator, over the grid interior.
pub fn fixed_point_residuals<T: Real>(
    op: &KernelOperator<T>,
    params: &Params<T>,
    u: &RadialField<T>,
    v: &RadialField<T>,
) -> Result<(T, T)> {
    let image_u = op.apply(&v.powf(params.q))?;
    let image_v = op.apply(&u.powf(params.p))?;
    let grid = op.grid();
    let sup_rel = |f: &RadialField<T>, g: &RadialField<T>| {
        grid.interior()
            .map(|i| ((f.values()[i] - g.values()[i]) / f.values()[i]).abs())
            .fold(T::zero(), T::max)
    };
    Ok((sup_rel(u, &image_u), sup_rel(v, &image_v)))
}

/// Decay rates used for the initial guess.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum InitRates {
    /// `(theta1, theta2)`.
    Slow,
    /// `(n - alpha, fastRateV)`.
    #[default]
    Fast,
}

/// Initial guess `u0 = (1 + r^2)^{-a/2}`, `v0 = (1 + r^2)^{-b/2}` with tail
/// models of rates `(a, b)` chosen by `rates`.
pub fn initial_guess<T: Real>(params: &Params<T>, grid: &Arc<RadialGrid<T>>, rates: InitRates) -> Result<(RadialField<T>, RadialField<T>)> {
    let (a, b) = match rates {
        InitRates::Slow => (params.slow_rate_u(), params.slow_rate_v()),
        InitRates::Fast => {
            let report = classify(params);
            (report.fast_rate_u, report.fast_rate_v)
        }
    };
    let half = T::lit(0.5);
    let u = RadialField::from_fn(grid.clone(), Some(TailModel::power(a)), |r| (T::one() + r * r).powf(-half * a))?;
    let v = RadialField::from_fn(grid.clone(), Some(TailModel::power(b)), |r| (T::one() + r * r).powf(-half * b))?;
    Ok((u, v))
}

/// [`initial_guess`] with slow rates.
pub fn default_init<T: Real>(params: &Params<T>, grid: &Arc<RadialGrid<T>>) -> Result<(RadialField<T>, RadialField<T>)> {
    initial_guess(params, grid, InitRates::Slow)
}

/// `lambda^theta f(lambda r)` sampled on the same grid.
pub fn dilate<T: Real>(f: &RadialField<T>, lambda: T, theta: T) -> Result<RadialField<T>> {
    let factor = lambda.powf(theta);
    let values = f.grid().nodes().iter().map(|&r| factor * f.eval(lambda * r)).collect();
    RadialField::new(f.grid().clone(), values, f.tail())
}

/// Dilation `lambda` with `lambda^theta u(lambda r_min) = 1`.
fn origin_gauge<T: Real>(u: &RadialField<T>, theta: T) -> T {
    let r0 = u.grid().r_min();
    let mut log_lambda = T::zero();
    for _ in 0..100 {
        let lambda = log_lambda.exp();
        let g = theta * log_lambda + u.eval(lambda * r0).ln();
        // Newton with the slope of the flat core, which is theta.
        let step = g / theta;
        log_lambda = log_lambda - step;
        if step.abs() < T::tol_floor(1e-15) {
            break;
        }
    }
    log_lambda.exp()
}

/// Refits the tail model, clamping the exponent to `[slow, fast]` so that
/// transient iterates keep an admissible (convergent) tail.
fn refit_tail<T: Real>(f: &mut RadialField<T>, slow: T, fast: T) -> Result<()> {
    let (lo, hi) = default_window(f.grid());
    let fit = fit_tail(f, lo, hi)?;
    let exponent = fit.exponent.max(slow).min(fast);
    f.set_tail(Some(TailModel::with_log(exponent, T::from_u8(fit.log_power).unwrap())));
    Ok(())
}

/// Damped Picard iteration for the radial HLS system; see [`solve_picard_observed`].
pub fn solve_picard<T: Real>(
    op: &KernelOperator<T>,
    params: &Params<T>,
    init: (RadialField<T>, RadialField<T>),
    cfg: &SolveConfig<T>,
) -> Result<SolutionPair<T>> {
    solve_picard_observed(op, params, init, cfg, |_, _, _| {})
}

/// Damped Picard iteration
///
/// ```text
/// u <- (1 - w) u + w I[v^q] / B^q,   v <- (1 - w) v + w I[u^p] / A^p
/// ```
///
/// where `(A, B)` are the amplitude factors by which `(u, v)` currently
/// over- or undershoot the fixed point, estimated in log coordinates from
/// `<I[v^q], v^q> / <u, v^q>` and `<I[u^p], u^p> / <v, u^p>`. Without this
/// correction the amplitude direction is unstable (its multiplier is
/// `sqrt(pq) > 1`). At a fixed point `A = B = 1`, so limits are true solutions.
///
/// With `normalize_at_origin`, each sweep is followed by the dilation
/// `lambda^{theta1} u(lambda r)`, `lambda^{theta2} v(lambda r)` that enforces
/// `u(r_min) = 1`; this pins the one-parameter family of solutions.
/// The discrete operator is only approximately dilation invariant, so the
/// converged pair's residual is of the order of the discretization error
/// rather than of `tol`. Tail models
/// are refit every sweep. `observe` sees every iterate.
pub fn solve_picard_observed<T: Real>(
    op: &KernelOperator<T>,
    params: &Params<T>,
    init: (RadialField<T>, RadialField<T>),
    cfg: &SolveConfig<T>,
    mut observe: impl FnMut(usize, &RadialField<T>, &RadialField<T>),
) -> Result<SolutionPair<T>> {
    cfg.validate()?;
    let grid = op.grid().clone();
    let (mut u, mut v) = init;
    if u.grid().spec() != grid.spec() || v.grid().spec() != grid.spec() {
        return Err(Error::Validation("initial fields live on a different grid than the operator".into()));
    }
    if u.values().iter().chain(v.values()).any(|&x| !(x > T::zero())) {
        return Err(Error::Validation("initial fields must be strictly positive".into()));
    }
    let (p, q) = (params.p, params.q);
    let (t1, t2) = (params.slow_rate_u(), params.slow_rate_v());
    let report = classify(params);
    let w = cfg.damping;
    let collapse = T::lit(1e-12);

    for sweep in 1..=cfg.max_iters {
        let vq = v.powf(q);
        let up = u.powf(p);
        let image_u = op.apply(&vq)?;
        let image_v = op.apply(&up)?;

        let ratio = |image: &RadialField<T>, current: &RadialField<T>, weight: &RadialField<T>| {
            let num: Vec<T> = image.values().iter().zip(weight.values()).map(|(&a, &b)| a * b).collect();
            let den: Vec<T> = current.values().iter().zip(weight.values()).map(|(&a, &b)| a * b).collect();
            grid.integrate(&num) / grid.integrate(&den)
        };
        let log_au = ratio(&image_u, &u, &vq).ln();
        let log_av = ratio(&image_v, &v, &up).ln();
        // -ln A + q ln B = ln a_u,  p ln A - ln B = ln a_v
        let det = T::one() - p * q;
        let log_a = -(log_au + q * log_av) / det;
        let log_b = -(p * log_au + log_av) / det;
        let corr_u = (-q * log_b).exp();
        let corr_v = (-p * log_a).exp();

        let blend = |old: &RadialField<T>, image: &RadialField<T>, corr: T| -> Vec<T> {
            old.values()
                .iter()
                .zip(image.values())
                .map(|(&o, &n)| (T::one() - w) * o + w * corr * n)
                .collect()
        };
        let mut u_next = RadialField::new(grid.clone(), blend(&u, &image_u, corr_u), u.tail())?;
        let mut v_next = RadialField::new(grid.clone(), blend(&v, &image_v, corr_v), v.tail())?;

        let (su, sv) = (u_next.sup(), v_next.sup());
        if !(su >= collapse && sv >= collapse) || !su.is_finite() || !sv.is_finite() {
            return Err(Error::Collapse {
                iterations: sweep,
                sup_u: su.as_f64(),
                sup_v: sv.as_f64(),
            });
        }
        refit_tail(&mut u_next, t1, report.fast_rate_u)?;
        refit_tail(&mut v_next, t2, report.fast_rate_v)?;
        if cfg.normalize_at_origin {
            let lambda = origin_gauge(&u_next, t1);
            u_next = dilate(&u_next, lambda, t1)?;
            v_next = dilate(&v_next, lambda, t2)?;
        }

        let rel_change = |a: &RadialField<T>, b: &RadialField<T>| {
            let diff = a
                .values()
                .iter()
                .zip(b.values())
                .map(|(&x, &y)| (x - y).abs())
                .fold(T::zero(), T::max);
            diff / a.sup()
        };
        let change = rel_change(&u_next, &u).max(rel_change(&v_next, &v));
        u = u_next;
        v = v_next;
        observe(sweep, &u, &v);

        if change < cfg.tol {
            let (ru, rv) = fixed_point_residuals(op, params, &u, &v)?;
            if !(ru <= cfg.residual_tol && rv <= cfg.residual_tol) {
                return Err(Error::Residual {
                    residual_u: ru.as_f64(),
                    residual_v: rv.as_f64(),
                    tol: cfg.residual_tol.as_f64(),
                });
            }
            return Ok(SolutionPair {
                u,
                v,
                params: *params,
                normalization: op.normalization(),
                iterations: sweep,
                residual_u: Some(ru),
                residual_v: Some(rv),
                branch: Branch::PicardFixedPoint,
            });
        }
    }
    let (ru, rv) = fixed_point_residuals(op, params, &u, &v)?;
    Err(Error::NonConvergence {
        iterations: cfg.max_iters,
        residual_u: ru.as_f64(),
        residual_v: rv.as_f64(),
    })
}

/// Amplitudes `(A, B)` of the singular pair `(A r^{-theta1}, B r^{-theta2})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularAmplitudes<T> {
    pub a: T,
    pub b: T,
    /// Power-law constants (including normalization) for `v^q` and `u^p`.
    pub c_u: T,
    pub c_v: T,
}

/// Solves `A = c_u B^q`, `B = c_v A^p` as a linear system in `(ln A, ln B)`.
pub fn singular_amplitudes<T: Real>(params: &Params<T>, normalization: Normalization) -> Result<SingularAmplitudes<T>> {
    let (p, q, alpha, n) = (params.p, params.q, params.alpha, params.n);
    let nf = params.dim();
    let (t1, t2) = (params.slow_rate_u(), params.slow_rate_v());
    for (label, beta) in [("q theta2", q * t2), ("p theta1", p * t1)] {
        if !(beta > alpha) {
            return Err(Error::PowerLawRange(format!("{label} = {beta} <= alpha = {alpha}")));
        }
        if !(beta < nf) {
            return Err(Error::PowerLawRange(format!("{label} = {beta} >= n = {n}")));
        }
    }
    let kappa = normalization.constant(n, alpha);
    let c_u = kappa * power_law_constant(n, alpha, q * t2)?;
    let c_v = kappa * power_law_constant(n, alpha, p * t1)?;
    let log_a = (c_u.ln() + q * c_v.ln()) / (T::one() - p * q);
    let log_b = c_v.ln() + p * log_a;
    Ok(SingularAmplitudes {
        a: log_a.exp(),
        b: log_b.exp(),
        c_u,
        c_v,
    })
}

/// The scale-invariant singular pair `(A r^{-theta1}, B r^{-theta2})` sampled
/// on `op`'s grid, with its fixed-point residual verified.
pub fn singular_solution<T: Real>(op: &KernelOperator<T>, params: &Params<T>) -> Result<SolutionPair<T>> {
    let amps = singular_amplitudes(params, op.normalization())?;
    let grid = op.grid().clone();
    let (t1, t2) = (params.slow_rate_u(), params.slow_rate_v());
    let u = RadialField::from_fn(grid.clone(), Some(TailModel::power(t1)), |r| amps.a * r.powf(-t1))?;
    let v = RadialField::from_fn(grid.clone(), Some(TailModel::power(t2)), |r| amps.b * r.powf(-t2))?;
    let (ru, rv) = fixed_point_residuals(op, params, &u, &v)?;
    let tol = T::lit(SINGULAR_RESIDUAL_TOL);
    if !(ru <= tol && rv <= tol) {
        return Err(Error::Residual {
            residual_u: ru.as_f64(),
            residual_v: rv.as_f64(),
            tol: SINGULAR_RESIDUAL_TOL,
        });
    }
    Ok(SolutionPair {
        u,
        v,
        params: *params,
        normalization: op.normalization(),
        iterations: 0,
        residual_u: Some(ru),
        residual_v: Some(rv),
        branch: Branch::SingularPowerLaw,
    })
}
