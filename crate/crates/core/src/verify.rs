//! The acceptance suite: eight criteria, each a list of measured checks
//! against fixed tolerances. Shared by the integration tests and the
//! `verify-all` command.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::decay::{
    check_u_limit, check_v_limit, default_window, envelope_check, fit_default, integrability_predicate, recursion_closed_form,
    recursion_fixed_point, run_recursion, check_fast_limits, Role, RATE_TOL,
};
use crate::error::{Error, Result};
use crate::exponents::{classify, Params, Regime, VFastCase};
use crate::oracle;
use crate::riesz::{GridSpec, KernelOperator, Normalization, RadialField, RadialGrid, TailModel};
use crate::shooting::{bisect_ground_state, trajectory_pair, ShotConfig};
use crate::solver::{initial_guess, singular_amplitudes, singular_solution, solve_picard, InitRates, SolutionPair, SolveConfig};

/// Static description of a criterion.
#[derive(Debug, Clone, Copy)]
pub struct Criterion {
    pub id: u8,
    /// Selector accepted by `--only`.
    pub name: &'static str,
    pub title: &'static str,
    pub budget_secs: f64,
}

pub const CRITERIA: [Criterion; 8] = [
    Criterion { id: 1, name: "exponents", title: "exponent algebra", budget_secs: 1.0 },
    Criterion { id: 2, name: "riesz", title: "Riesz power-law identity", budget_secs: 30.0 },
    Criterion { id: 3, name: "singular", title: "singular-solution residual", budget_secs: 30.0 },
    Criterion { id: 4, name: "prop4", title: "fast-decay limits", budget_secs: 120.0 },
    Criterion { id: 5, name: "thm1.4", title: "slow decay of the shooting ground state", budget_secs: 60.0 },
    Criterion { id: 6, name: "thm1.1", title: "rate envelope over solver paths", budget_secs: 300.0 },
    Criterion { id: 7, name: "prop5.3", title: "exponent blow-up recursion", budget_secs: 1.0 },
    Criterion { id: 8, name: "convergence", title: "self-convergence under grid doubling", budget_secs: 300.0 },
];

/// Resolves `--only` selectors (names or ids) to criterion ids.
pub fn resolve(selectors: &[String]) -> Result<Vec<u8>> {
    if selectors.is_empty() {
        return Ok(CRITERIA.iter().map(|c| c.id).collect());
    }
    let mut ids = Vec::new();
    for sel in selectors.iter().flat_map(|s| s.split(',')).map(str::trim).filter(|s| !s.is_empty()) {
        let found = CRITERIA.iter().find(|c| c.name == sel || c.id.to_string() == sel);
        match found {
            Some(c) if !ids.contains(&c.id) => ids.push(c.id),
            Some(_) => {}
            None => {
                let known: Vec<&str> = CRITERIA.iter().map(|c| c.name).collect();
                return Err(Error::Validation(format!("unknown criterion '{sel}' (known: {})", known.join(", "))));
            }
        }
    }
    ids.sort_unstable();
    Ok(ids)
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Check {
    pub label: String,
    pub expected: String,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    /// Passes when `|measured| <= tolerance`.
    fn within(label: impl Into<String>, expected: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Self {
            label: label.into(),
            expected: expected.into(),
            measured,
            tolerance,
            passed: measured.abs() <= tolerance,
        }
    }

    fn flag(label: impl Into<String>, expected: impl Into<String>, ok: bool) -> Self {
        Self {
            label: label.into(),
            expected: expected.into(),
            measured: if ok { 1.0 } else { 0.0 },
            tolerance: 0.0,
            passed: ok,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CriterionReport {
    pub id: u8,
    pub name: String,
    pub title: String,
    pub checks: Vec<Check>,
    pub elapsed_secs: f64,
    pub budget_secs: f64,
    /// Set when the criterion aborted with an error.
    pub error: Option<String>,
    pub passed: bool,
}

impl CriterionReport {
    /// One-line summary: `criterion N (name): PASS|FAIL ...`.
    pub fn summary_line(&self) -> String {
        let status = if self.passed { "PASS" } else { "FAIL" };
        let failed: Vec<&str> = self.checks.iter().filter(|c| !c.passed).map(|c| c.label.as_str()).collect();
        let mut line = format!(
            "criterion {} ({}): {status} [{} checks, {:.2}s of {:.0}s budget]",
            self.id,
            self.name,
            self.checks.len(),
            self.elapsed_secs,
            self.budget_secs
        );
        if let Some(e) = &self.error {
            line.push_str(&format!(" error: {e}"));
        }
        if !failed.is_empty() {
            line.push_str(&format!(" failed: {}", failed.join("; ")));
        }
        line
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct RieszCase {
    slope_error: f64,
    amplitude: f64,
    amplitude_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct SingularMeasure {
    a: f64,
    b: f64,
    residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct FastMeasure {
    b0: f64,
    u_deviation: f64,
    log_deviation: f64,
    weakened_deviation: f64,
}

type OpKey = (u32, u64, usize);

/// Runs criteria, caching operators and measurements shared between them.
pub struct Suite {
    seed: u64,
    monte_carlo: Option<usize>,
    ops: Mutex<HashMap<OpKey, Arc<KernelOperator<f64>>>>,
    riesz: Mutex<HashMap<usize, [RieszCase; 2]>>,
    singular: Mutex<HashMap<usize, SingularMeasure>>,
    fast: Mutex<HashMap<usize, FastMeasure>>,
}

/// Power-law identity cases `(n, alpha, beta)`.
pub const RIESZ_CASES: [(u32, f64, f64); 2] = [(5, 2.0, 3.0), (4, 2.0, 2.5)];
pub const DEFAULT_SEED: u64 = 20_240_601;
pub const MC_SAMPLES: usize = 10_000_000;

impl Default for Suite {
    fn default() -> Self {
        Self::new(DEFAULT_SEED)
    }
}

impl Suite {
    /// `seed` drives the random parameter draws of criteria 1 and 7 and,
    /// when enabled, the Monte Carlo oracle.
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            monte_carlo: None,
            ops: Mutex::new(HashMap::new()),
            riesz: Mutex::new(HashMap::new()),
            singular: Mutex::new(HashMap::new()),
            fast: Mutex::new(HashMap::new()),
        }
    }

    /// Adds the Monte Carlo cross-check with `samples` draws to criterion 2.
    pub fn with_monte_carlo(mut self, samples: usize) -> Self {
        self.monte_carlo = Some(samples);
        self
    }

    /// Runs the selected criteria in id order.
    pub fn run(&self, ids: &[u8]) -> Vec<CriterionReport> {
        ids.iter().map(|&id| self.run_one(id)).collect()
    }

    pub fn run_one(&self, id: u8) -> CriterionReport {
        let meta = CRITERIA.iter().find(|c| c.id == id).copied().expect("criterion id");
        let start = Instant::now();
        let outcome = match id {
            1 => self.exponent_algebra(),
            2 => self.riesz_identity(),
            3 => self.singular_residual(),
            4 => self.fast_limits(),
            5 => self.slow_shooting(),
            6 => self.envelope(),
            7 => self.recursion(),
            _ => self.self_convergence(),
        };
        let elapsed_secs = start.elapsed().as_secs_f64();
        let (mut checks, error) = match outcome {
            Ok(c) => (c, None),
            Err(e) => (Vec::new(), Some(e.to_string())),
        };
        checks.push(Check {
            label: "runtime (s)".into(),
            expected: format!("< {} s", meta.budget_secs),
            measured: elapsed_secs,
            tolerance: meta.budget_secs,
            passed: elapsed_secs < meta.budget_secs,
        });
        let passed = error.is_none() && checks.iter().all(|c| c.passed);
        CriterionReport {
            id,
            name: meta.name.into(),
            title: meta.title.into(),
            checks,
            elapsed_secs,
            budget_secs: meta.budget_secs,
            error,
            passed,
        }
    }

    fn operator(&self, n: u32, alpha: f64, count: usize, normalization: Normalization) -> Result<Arc<KernelOperator<f64>>> {
        let key = (n, alpha.to_bits(), count);
        let plain = {
            let cached = self.ops.lock().unwrap().get(&key).cloned();
            match cached {
                Some(op) => op,
                None => {
                    let spec = GridSpec { count, ..GridSpec::default() };
                    let grid = Arc::new(RadialGrid::from_spec(n, spec)?);
                    let op = Arc::new(KernelOperator::assemble(grid, alpha, Normalization::Plain)?);
                    self.ops.lock().unwrap().insert(key, op.clone());
                    op
                }
            }
        };
        Ok(match normalization {
            Normalization::Plain => plain,
            other => Arc::new(plain.renormalized(other)),
        })
    }

    fn exponent_algebra(&self) -> Result<Vec<Check>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut worst_identity: f64 = 0.0;
        let mut worst_critical: f64 = 0.0;
        let mut critical_misclassified = 0usize;
        for _ in 0..1000 {
            let params = random_params(&mut rng);
            let report = classify(&params);
            let nf = params.dim();
            worst_identity = worst_identity
                .max((report.r0 * report.slow_rate_u - nf).abs() / nf)
                .max((report.s0 * report.slow_rate_v - nf).abs() / nf);

            let critical = random_critical(&mut rng);
            let report = classify(&critical);
            if report.regime != Regime::Critical {
                critical_misclassified += 1;
            }
            worst_critical = worst_critical
                .max((report.r0 - (critical.p + 1.0)).abs() / (critical.p + 1.0))
                .max((report.s0 - (critical.q + 1.0)).abs() / (critical.q + 1.0));
        }
        Ok(vec![
            Check::within("r0*slowRateU = n and s0*slowRateV = n (1000 random)", "relative error 0", worst_identity, 1e-12),
            Check::within("critical r0 = p+1, s0 = q+1 (1000 random)", "relative error 0", worst_critical, 1e-12),
            Check::within("critical inputs classified Critical", "0 misclassified", critical_misclassified as f64, 0.0),
        ])
    }

    fn riesz_cases(&self, count: usize) -> Result<[RieszCase; 2]> {
        if let Some(m) = self.riesz.lock().unwrap().get(&count) {
            return Ok(*m);
        }
        let mut out = [RieszCase { slope_error: 0.0, amplitude: 0.0, amplitude_error: 0.0 }; 2];
        for (slot, &(n, alpha, beta)) in out.iter_mut().zip(RIESZ_CASES.iter()) {
            let op = self.operator(n, alpha, count, Normalization::Plain)?;
            let grid = op.grid().clone();
            let f = RadialField::from_fn(grid.clone(), Some(TailModel::power(beta)), |s| s.powf(-beta))?;
            let g = op.apply(&f)?;
            let interior: Vec<usize> = grid.interior().collect();
            let x: Vec<f64> = interior.iter().map(|&i| grid.nodes()[i].ln()).collect();
            let y: Vec<f64> = interior.iter().map(|&i| g.values()[i].ln()).collect();
            let slope = least_squares_slope(&x, &y);
            let closed = oracle::power_law_closed_form(n, alpha, beta);
            let amps: Vec<f64> = interior.iter().map(|&i| g.values()[i] * grid.nodes()[i].powf(beta - alpha)).collect();
            let amplitude = amps.iter().sum::<f64>() / amps.len() as f64;
            let amplitude_error = amps.iter().map(|a| (a / closed - 1.0).abs()).fold(0.0, f64::max);
            *slot = RieszCase {
                slope_error: (slope - (alpha - beta)).abs(),
                amplitude,
                amplitude_error,
            };
        }
        self.riesz.lock().unwrap().insert(count, out);
        Ok(out)
    }

    fn riesz_identity(&self) -> Result<Vec<Check>> {
        let cases = self.riesz_cases(GridSpec::<f64>::default().count)?;
        let mut checks = Vec::new();
        for (&(n, alpha, beta), m) in RIESZ_CASES.iter().zip(cases.iter()) {
            let tag = format!("n={n} alpha={alpha} beta={beta}");
            let closed = oracle::power_law_closed_form(n, alpha, beta);
            checks.push(Check::within(format!("{tag}: slope error"), format!("slope {}", alpha - beta), m.slope_error, 1e-3));
            checks.push(Check::within(
                format!("{tag}: max interior amplitude error vs closed form"),
                format!("c = {closed:.10}"),
                m.amplitude_error,
                1e-3,
            ));
            let mut quad_dev: f64 = 0.0;
            let mut op_dev: f64 = 0.0;
            for r in [0.1, 1.0, 10.0] {
                let q = oracle::reduced_power_law(n, alpha, beta, r)? * r.powf(beta - alpha);
                quad_dev = quad_dev.max((q / closed - 1.0).abs());
                op_dev = op_dev.max((m.amplitude / q - 1.0).abs());
            }
            checks.push(Check::within(format!("{tag}: reduced quadrature at 3 radii vs closed form"), "agreement", quad_dev, 1e-6));
            checks.push(Check::within(format!("{tag}: operator amplitude vs reduced quadrature"), "agreement", op_dev, 1e-3));
            if let Some(samples) = self.monte_carlo {
                let (mc, se) = oracle::monte_carlo_power_law(n, alpha, beta, samples, self.seed);
                checks.push(Check::within(
                    format!("{tag}: operator amplitude vs Monte Carlo ({samples} samples, se {:.1e})", se / mc),
                    format!("MC = {mc:.8}"),
                    (m.amplitude / mc - 1.0).abs(),
                    1e-3,
                ));
                checks.push(Check::within(format!("{tag}: Monte Carlo vs closed form in standard errors"), "< 5 se", (mc - closed).abs() / se, 5.0));
            }
        }
        Ok(checks)
    }

    fn singular_measure(&self, count: usize) -> Result<SingularMeasure> {
        if let Some(m) = self.singular.lock().unwrap().get(&count) {
            return Ok(*m);
        }
        let params = Params::new(5, 2.0, 3.0, 3.0)?;
        let op = self.operator(5, 2.0, count, Normalization::Laplacian)?;
        let pair = singular_solution(&op, &params)?;
        let grid = op.grid();
        let report = classify(&params);
        let a = pair.u.values()[0] * grid.nodes()[0].powf(report.slow_rate_u);
        let b = pair.v.values()[0] * grid.nodes()[0].powf(report.slow_rate_v);
        let residual = pair.residual_u.unwrap().max(pair.residual_v.unwrap());
        let m = SingularMeasure { a, b, residual };
        self.singular.lock().unwrap().insert(count, m);
        Ok(m)
    }

    fn singular_residual(&self) -> Result<Vec<Check>> {
        let m = self.singular_measure(GridSpec::<f64>::default().count)?;
        let sqrt2 = 2f64.sqrt();
        // Oracle: A r^{-1} solves -Lap u = u^3 in R^5 iff 2A = A^3.
        let u = |r: f64| sqrt2 / r;
        let fd = [0.5, 1.0, 2.0]
            .iter()
            .map(|&r| ((oracle::radial_laplacian_fd(u, r, 5, 1e-4) + u(r).powi(3)) / u(r).powi(3)).abs())
            .fold(0.0, f64::max);
        let params = Params::new(5, 2.0, 3.0, 3.0)?;
        let amps = singular_amplitudes(&params, Normalization::Laplacian)?;
        let (ca, cb) = oracle::amplitude_contraction(amps.c_u, amps.c_v, params.p, params.q);
        let consistency = ((ca - amps.a) / amps.a).abs().max(((cb - amps.b) / amps.b).abs());
        Ok(vec![
            Check::within("A - sqrt(2)", "A = 1.4142135624", m.a - sqrt2, 1e-6),
            Check::within("B - sqrt(2)", "B = 1.4142135624", m.b - sqrt2, 1e-6),
            Check::within("finite-difference Laplacian residual of sqrt(2)/r", "-Lap u = u^3", fd, 1e-6),
            Check::within("fixed-point residual on grid interior", "<= 1e-3", m.residual, 1e-3),
            Check::within("log-linear vs contraction amplitudes", "agreement", consistency, 1e-10),
        ])
    }

    fn critical_picard(&self, n: u32, alpha: f64, p: f64, q: f64, count: usize) -> Result<SolutionPair<f64>> {
        let params = Params::new(n, alpha, p, q)?;
        let op = self.operator(n, alpha, count, Normalization::Laplacian)?;
        let init = initial_guess(&params, op.grid(), InitRates::Fast)?;
        solve_picard(&op, &params, init, &SolveConfig::default())
    }

    fn fast_measure(&self, count: usize) -> Result<FastMeasure> {
        if let Some(m) = self.fast.lock().unwrap().get(&count) {
            return Ok(*m);
        }
        let pair = self.critical_picard(4, 2.0, 3.0, 3.0, count)?;
        let report = check_fast_limits(&pair)?;
        let (log, weak) = synthetic_limits(count)?;
        let m = FastMeasure {
            b0: report.b0,
            u_deviation: report.u_limit.max_deviation,
            log_deviation: log,
            weakened_deviation: weak,
        };
        self.fast.lock().unwrap().insert(count, m);
        Ok(m)
    }

    fn fast_limits(&self) -> Result<Vec<Check>> {
        let count = GridSpec::<f64>::default().count;
        let m = self.fast_measure(count)?;
        let mut checks = vec![
            Check::within(
                format!("bubble n=4 alpha=2 p=q=3: max |u r^2 - B0|/B0 on outer window (B0 = {:.6})", m.b0),
                "<= 5%",
                m.u_deviation,
                RATE_TOL,
            ),
            Check::within("synthetic LogCorrected (p=2, q=9): max |v r^2/ln r - |S^3| B0^p| / limit", "<= 5%", m.log_deviation, RATE_TOL),
            Check::within("synthetic Weakened (p=1.5, q=9): max |v r - B0^p c(4,2,3)| / limit", "<= 5%", m.weakened_deviation, RATE_TOL),
        ];
        // Exactly one branch applies per exponent set.
        let (u, v, params) = synthetic_pair(2.0, 9.0, count)?;
        let wrong: Vec<bool> = [VFastCase::Pure, VFastCase::Weakened]
            .iter()
            .map(|&case| {
                matches!(
                    check_v_limit(&u, &v, &params, Normalization::Plain, case, 1.0, default_window(u.grid())),
                    Err(Error::Precondition(_))
                )
            })
            .collect();
        checks.push(Check::flag("inapplicable branches raise precondition errors", "both rejected", wrong.iter().all(|&w| w)));
        Ok(checks)
    }

    fn slow_shooting(&self) -> Result<Vec<Check>> {
        let params = Params::new(5, 2.0, 3.0, 3.0)?;
        let report = classify(&params);
        let cfg = ShotConfig::default();
        let result = bisect_ground_state(&params, 0.5, 2.0, 60, &cfg)?;
        let pair = trajectory_pair(&params, &cfg, &result.trajectory)?;
        let fit_u = fit_default(&pair.u)?;
        let fit_v = fit_default(&pair.v)?;
        Ok(vec![
            Check::within(
                format!("u exponent {:.5} vs slowRateU {}", fit_u.exponent, report.slow_rate_u),
                "within 5%",
                (fit_u.exponent - report.slow_rate_u) / report.slow_rate_u,
                RATE_TOL,
            ),
            Check::within(
                format!("v exponent {:.5} vs slowRateV {}", fit_v.exponent, report.slow_rate_v),
                "within 5%",
                (fit_v.exponent - report.slow_rate_v) / report.slow_rate_v,
                RATE_TOL,
            ),
            Check::flag("u not in L^r0", "integrabilityPredicate false", !integrability_predicate(&fit_u, &report, 5, Role::U)),
            Check::flag("v not in L^s0", "integrabilityPredicate false", !integrability_predicate(&fit_v, &report, 5, Role::V)),
        ])
    }

    fn envelope(&self) -> Result<Vec<Check>> {
        let count = GridSpec::<f64>::default().count;
        let mut pairs: Vec<(String, SolutionPair<f64>)> = Vec::new();
        for (n, alpha, p, q) in [(4, 2.0, 3.0, 3.0), (3, 2.0, 5.0, 5.0), (3, 1.5, 3.0, 3.0), (4, 2.0, 2.0, 5.0), (4, 2.0, 1.5, 9.0)] {
            let pair = self.critical_picard(n, alpha, p, q, count)?;
            pairs.push((format!("picard ({n},{alpha},{p},{q})"), pair));
        }
        for (n, p, q) in [(5, 3.0, 3.0), (6, 2.0, 4.0)] {
            let params = Params::new(n, 2.0, p, q)?;
            let op = self.operator(n, 2.0, count, Normalization::Laplacian)?;
            pairs.push((format!("singular ({n},2,{p},{q})"), singular_solution(&op, &params)?));
        }
        for (n, p, q, lo, hi) in [(5, 3.0, 3.0, 0.5, 2.0), (6, 2.0, 4.0, 0.1, 10.0)] {
            let params = Params::new(n, 2.0, p, q)?;
            let cfg = ShotConfig::default();
            let result = bisect_ground_state(&params, lo, hi, 60, &cfg)?;
            pairs.push((format!("shooting ({n},2,{p},{q})"), trajectory_pair(&params, &cfg, &result.trajectory)?));
        }
        let mut checks = Vec::new();
        for (label, pair) in &pairs {
            let report = classify(&pair.params);
            let env = envelope_check(pair, &report)?;
            let failed: Vec<&str> = env.items.iter().filter(|i| !i.passed).map(|i| i.key.as_str()).collect();
            checks.push(Check::within(
                format!(
                    "{label}: exponents ({:.4}, {:.4}), eps0 {:.3}, {} items{}",
                    env.fit_u.exponent,
                    env.fit_v.exponent,
                    env.epsilon0_u.min(env.epsilon0_v),
                    env.items.len(),
                    if failed.is_empty() { String::new() } else { format!(", failed {}", failed.join(",")) }
                ),
                "0 failed envelope items",
                failed.len() as f64,
                0.0,
            ));
        }
        Ok(checks)
    }

    fn recursion(&self) -> Result<Vec<Check>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x5eed);
        let mut worst: f64 = 0.0;
        let mut unbounded = 0usize;
        let mut spurious = 0usize;
        for _ in 0..1000 {
            let (alpha, p, q) = random_recursion_params(&mut rng);
            let fixed = recursion_fixed_point(&alpha, &p, &q);
            let below = fixed * rng.random_range(-1.0..0.999);
            let trace = run_recursion(below, alpha, p, q, 10_000)?;
            if trace.blowup_index.is_none() {
                unbounded += 1;
            }
            for (j, b) in trace.b_seq.iter().enumerate() {
                let closed = recursion_closed_form(&below, &alpha, &p, &q, j + 1);
                let scale = (p * q).powi(j as i32 + 1) * ((below - fixed).abs() + fixed.abs());
                worst = worst.max((b - closed).abs() / scale);
            }
            let above = fixed * rng.random_range(1.001..3.0);
            let trace = run_recursion(above, alpha, p, q, 10_000)?;
            if trace.blowup_index.is_some() {
                spurious += 1;
            }
        }
        // Exact arithmetic: the fixed point is stationary and traces equal the closed form.
        let mut exact_mismatch = 0usize;
        for _ in 0..100 {
            let r = |rng: &mut ChaCha8Rng, lo: i64, hi: i64| BigRational::new(BigInt::from(rng.random_range(lo..hi)), BigInt::from(rng.random_range(1..50i64)));
            let alpha = r(&mut rng, 1, 200);
            let p = r(&mut rng, 50, 300);
            let q = r(&mut rng, 50, 300);
            if p.clone() * q.clone() <= BigRational::from_integer(1.into()) {
                continue;
            }
            let fixed = recursion_fixed_point(&alpha, &p, &q);
            let at_fixed = run_recursion(fixed.clone(), alpha.clone(), p.clone(), q.clone(), 30)?;
            if at_fixed.blowup_index.is_some() || at_fixed.b_seq.iter().any(|b| *b != fixed) {
                exact_mismatch += 1;
            }
            let b0 = fixed.clone() - r(&mut rng, 1, 100);
            let trace = run_recursion(b0.clone(), alpha.clone(), p.clone(), q.clone(), 30)?;
            for (j, b) in trace.b_seq.iter().enumerate() {
                if *b != recursion_closed_form(&b0, &alpha, &p, &q, j + 1) {
                    exact_mismatch += 1;
                }
            }
        }
        Ok(vec![
            Check::within("b_j vs closed form, 1000 random b0 < fixed point", "relative error 0", worst, 1e-12),
            Check::within("traces without a negative b_j (b0 < fixed point)", "0", unbounded as f64, 0.0),
            Check::within("traces with a negative b_j (b0 > fixed point)", "0", spurious as f64, 0.0),
            Check::within("exact rational traces off the closed form or fixed point", "0", exact_mismatch as f64, 0.0),
        ])
    }

    fn self_convergence(&self) -> Result<Vec<Check>> {
        let base = GridSpec::<f64>::default().count;
        let fine = 2 * base;
        let mut checks = Vec::new();
        let (r0, r1) = (self.riesz_cases(base)?, self.riesz_cases(fine)?);
        for ((&(n, alpha, beta), a), b) in RIESZ_CASES.iter().zip(r0.iter()).zip(r1.iter()) {
            let tag = format!("n={n} alpha={alpha} beta={beta}");
            checks.push(Check::within(format!("{tag}: slope error change"), "< half of 1e-3", b.slope_error - a.slope_error, 5e-4));
            checks.push(Check::within(
                format!("{tag}: amplitude relative change"),
                "< half of 1e-3",
                (b.amplitude - a.amplitude) / a.amplitude,
                5e-4,
            ));
        }
        let (s0, s1) = (self.singular_measure(base)?, self.singular_measure(fine)?);
        checks.push(Check::within("singular amplitude A change", "< half of 1e-6", s1.a - s0.a, 5e-7));
        checks.push(Check::within("singular residual change", "< half of 1e-3", s1.residual - s0.residual, 5e-4));
        let (f0, f1) = (self.fast_measure(base)?, self.fast_measure(fine)?);
        checks.push(Check::within("bubble B0 relative change", "< half of 5%", (f1.b0 - f0.b0) / f0.b0, 0.5 * RATE_TOL));
        checks.push(Check::within("bubble u-limit deviation change", "< half of 5%", f1.u_deviation - f0.u_deviation, 0.5 * RATE_TOL));
        checks.push(Check::within("LogCorrected deviation change", "< half of 5%", f1.log_deviation - f0.log_deviation, 0.5 * RATE_TOL));
        checks.push(Check::within(
            "Weakened deviation change",
            "< half of 5%",
            f1.weakened_deviation - f0.weakened_deviation,
            0.5 * RATE_TOL,
        ));
        Ok(checks)
    }
}

fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Uniform draw of valid parameters: `n` in 3..=10, `alpha` in (0, n), `pq > 1`.
pub fn random_params(rng: &mut impl Rng) -> Params<f64> {
    loop {
        let n = rng.random_range(3..=10u32);
        let alpha = rng.random_range(0.05..(n as f64 - 0.05));
        let p = rng.random_range(0.2..12.0);
        let q = rng.random_range(0.2..12.0);
        if let Ok(params) = Params::new(n, alpha, p, q) {
            return params;
        }
    }
}

/// Random parameters on the critical manifold `1/(p+1) + 1/(q+1) = (n-alpha)/n`.
pub fn random_critical(rng: &mut impl Rng) -> Params<f64> {
    loop {
        let n = rng.random_range(3..=10u32);
        let nf = n as f64;
        let alpha = rng.random_range(0.05..(nf - 0.05));
        let p = rng.random_range(0.2..12.0);
        let rest = (nf - alpha) / nf - 1.0 / (p + 1.0);
        if rest <= 0.0 || rest >= 1.0 {
            continue;
        }
        let q = 1.0 / rest - 1.0;
        if let Ok(params) = Params::new(n, alpha, p, q) {
            return params;
        }
    }
}

fn random_recursion_params(rng: &mut impl Rng) -> (f64, f64, f64) {
    loop {
        let alpha = rng.random_range(0.1..8.0);
        let p = rng.random_range(0.3..8.0);
        let q = rng.random_range(0.3..8.0);
        if p * q > 1.05 {
            return (alpha, p, q);
        }
    }
}

/// `u = (1 + r^2)^{-1}` (so `u r^2 -> 1`) and its exact plain Riesz image
/// `v = I_2[u^p]` in `R^4`, on `[1e-3, 1e8]`.
fn synthetic_pair(p: f64, q: f64, count: usize) -> Result<(RadialField<f64>, RadialField<f64>, Params<f64>)> {
    let params = Params::new(4, 2.0, p, q)?;
    let grid = Arc::new(RadialGrid::log(4, 1e-3, 1e8, count)?);
    let u = RadialField::from_fn(grid.clone(), Some(TailModel::power(2.0)), |r| 1.0 / (1.0 + r * r))?;
    let v = RadialField::from_fn(grid, None, |r| oracle::newtonian_r4(p, r))?;
    Ok((u, v, params))
}

/// Maximum deviations of the synthetic LogCorrected and Weakened pairs on the
/// default window.
fn synthetic_limits(count: usize) -> Result<(f64, f64)> {
    let mut out = [0.0; 2];
    for (slot, (p, case)) in out.iter_mut().zip([(2.0, VFastCase::LogCorrected), (1.5, VFastCase::Weakened)]) {
        let (u, v, params) = synthetic_pair(p, 9.0, count)?;
        let (lo, hi) = default_window(u.grid());
        let outer = check_v_limit(&u, &v, &params, Normalization::Plain, case, 1.0, (lo, hi))?;
        // u itself must approach B0 = 1.
        let u_check = check_u_limit(&u, &params, 1.0, (lo, hi))?;
        if !u_check.passed {
            return Err(Error::Precondition("synthetic u does not approach its limit".into()));
        }
        *slot = outer.max_deviation;
    }
    Ok((out[0], out[1]))
}
