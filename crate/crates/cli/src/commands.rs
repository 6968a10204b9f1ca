//! One function per subcommand. Each prints a JSON report on stdout and,
//! with an output directory, writes CSV data, the report and a manifest.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use hls_core::decay::{check_fast_limits, envelope_check, fit_default, DecayFit, EnvelopeReport, FastLimitReport};
use hls_core::exponents::{classify, Params, Regime, RegimeReport, VFastCase};
use hls_core::riesz::{GridSpec, KernelOperator, Normalization, RadialField, RadialGrid, TailModel};
use hls_core::shooting::{bisect_ground_state, shoot, trajectory_pair, Outcome, ShotConfig, Trajectory};
use hls_core::solver::{initial_guess, singular_amplitudes, singular_solution, solve_picard, Branch, SolutionPair, SolveConfig};
use hls_core::verify::{self, Suite, MC_SAMPLES};
use hls_core::{Error, Result};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::config::RunConfig;
use crate::output::{self, out_file, params_json, write_csv, write_json, write_records, RunManifest, MANIFEST, REPORT};

const SOLUTION_CSV: &str = "solution.csv";
const TRAJECTORY_CSV: &str = "trajectory.csv";
const FITS_CSV: &str = "fits.csv";

fn print(value: &Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable report"));
}

fn to_value(x: &impl Serialize) -> Value {
    serde_json::to_value(x).expect("serializable value")
}

/// Flat JSON of the exponent report in the caller's orientation of `(p, q)`.
fn regime_json(params: &Params<f64>, report: &RegimeReport<f64>) -> Value {
    let mut map = match params_json(params) {
        Value::Object(m) => m,
        _ => unreachable!(),
    };
    map.insert("swapped".into(), json!(params.swapped));
    if let Value::Object(r) = to_value(report) {
        map.extend(r);
    }
    Value::Object(map)
}

pub fn exponents(cfg: &RunConfig, out: Option<&Path>) -> Result<()> {
    let params = cfg.params()?;
    let report = regime_json(&params, &classify(&params));
    if let Some(dir) = out {
        write_json(&out_file(dir, REPORT)?, &report)?;
        let manifest = RunManifest::new("exponents", &params, GridSpec::default(), json!({}), vec![REPORT.into()]);
        write_json(&out_file(dir, MANIFEST)?, &manifest)?;
    }
    print(&report);
    Ok(())
}

/// Columns `(u, v)` in the caller's orientation.
fn oriented<T>(params: &Params<f64>, u: T, v: T) -> (T, T) {
    if params.swapped {
        (v, u)
    } else {
        (u, v)
    }
}

fn outcome_oriented(params: &Params<f64>, outcome: Outcome) -> Outcome {
    match (params.swapped, outcome) {
        (true, Outcome::UCrossedZero) => Outcome::VCrossedZero,
        (true, Outcome::VCrossedZero) => Outcome::UCrossedZero,
        (_, o) => o,
    }
}

fn write_pair_csv(path: &Path, pair: &SolutionPair<f64>) -> Result<()> {
    let (u, v) = oriented(&pair.params, &pair.u, &pair.v);
    let rows = pair
        .grid()
        .nodes()
        .iter()
        .zip(u.values().iter().zip(v.values()))
        .map(|(&r, (&a, &b))| vec![r, a, b]);
    write_csv(path, &["r", "u", "v"], rows)
}

fn write_trajectory_csv(path: &Path, params: &Params<f64>, traj: &Trajectory<f64>) -> Result<()> {
    let rows = traj.samples.iter().map(|s| {
        let ((u, du), (v, dv)) = oriented(params, (s.u, s.du), (s.v, s.dv));
        vec![s.r, u, du, v, dv]
    });
    write_csv(path, &["r", "u", "du", "v", "dv"], rows)
}

fn fits_csv(path: &Path, params: &Params<f64>, fit_u: &DecayFit<f64>, fit_v: &DecayFit<f64>) -> Result<()> {
    let (a, b) = oriented(params, fit_u, fit_v);
    let row = |role: &str, f: &DecayFit<f64>| {
        vec![
            role.to_string(),
            output::fmt(f.window_lo),
            output::fmt(f.window_hi),
            output::fmt(f.exponent),
            f.log_power.to_string(),
            output::fmt(f.amplitude),
            output::fmt(f.r2),
            f.nodes.to_string(),
        ]
    };
    write_records(
        path,
        &["role", "windowLo", "windowHi", "exponent", "logPower", "amplitude", "r2", "nodes"],
        [row("u", a), row("v", b)],
    )
}

/// Decay diagnostics of a pair: fits, envelope and (for fast-decaying pairs)
/// far-field limits, plus a flat map of checks keyed by result.
pub struct Analysis {
    pub regime: RegimeReport<f64>,
    pub envelope: EnvelopeReport<f64>,
    pub fast: std::result::Result<FastLimitReport<f64>, String>,
}

impl Analysis {
    pub fn of(pair: &SolutionPair<f64>) -> Result<Self> {
        let regime = classify(&pair.params);
        let envelope = envelope_check(pair, &regime)?;
        let fast = check_fast_limits(pair).map_err(|e| e.to_string());
        Ok(Self { regime, envelope, fast })
    }

    fn checks(&self) -> Map<String, Value> {
        let mut checks = Map::new();
        for item in &self.envelope.items {
            checks.insert(item.key.clone(), json!({ "value": item.value, "bound": item.bound, "passed": item.passed }));
        }
        if let Ok(fast) = &self.fast {
            checks.insert("prop4.2-B0".into(), json!({ "value": fast.b0 }));
            checks.insert("prop4.2-u-limit".into(), to_value(&fast.u_limit));
            let key = match fast.v_case {
                VFastCase::Pure => "prop4.3-v-limit",
                VFastCase::LogCorrected => "prop4.4-v-limit",
                VFastCase::Weakened => "prop4.5-v-limit",
            };
            checks.insert(key.into(), to_value(&fast.v_limit));
        }
        checks
    }

    fn json(&self) -> Value {
        json!({
            "fitU": self.envelope.fit_u,
            "fitV": self.envelope.fit_v,
            "integrableU": self.envelope.integrable_u,
            "integrableV": self.envelope.integrable_v,
            "epsilon0U": self.envelope.epsilon0_u,
            "epsilon0V": self.envelope.epsilon0_v,
            "monotone": self.envelope.monotone,
            "lowR2": self.envelope.low_r2,
            "envelopePassed": self.envelope.passed(),
            "fastLimits": self.fast.as_ref().ok(),
            "fastLimitsSkipped": self.fast.as_ref().err(),
            "checks": self.checks(),
        })
    }
}

/// Writes report, data and manifest for a pair-producing command.
#[allow(clippy::too_many_arguments)]
fn finish_pair_run(
    command: &str,
    out: Option<&Path>,
    pair: &SolutionPair<f64>,
    grid_spec: GridSpec<f64>,
    config: Value,
    mut report: Map<String, Value>,
    data: impl FnOnce(&Path) -> Result<()>,
    data_name: &str,
) -> Result<()> {
    let analysis = Analysis::of(pair);
    match &analysis {
        Ok(a) => {
            report.insert("analysis".into(), a.json());
        }
        Err(e) => {
            report.insert("analysisError".into(), json!(e.to_string()));
        }
    }
    let report = Value::Object(report);
    if let Some(dir) = out {
        data(&out_file(dir, data_name)?)?;
        let mut outputs = vec![data_name.to_string(), REPORT.to_string()];
        if let Ok(a) = &analysis {
            fits_csv(&out_file(dir, FITS_CSV)?, &pair.params, &a.envelope.fit_u, &a.envelope.fit_v)?;
            outputs.push(FITS_CSV.into());
        }
        write_json(&out_file(dir, REPORT)?, &report)?;
        let manifest = RunManifest::new(command, &pair.params, grid_spec, config, outputs);
        write_json(&out_file(dir, MANIFEST)?, &manifest)?;
    }
    print(&report);
    Ok(())
}

fn base_report(command: &str, params: &Params<f64>) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("command".into(), json!(command));
    m.insert("params".into(), params_json(params));
    m.insert("regime".into(), regime_json(params, &classify(params)));
    m
}

fn operator(params: &Params<f64>, spec: GridSpec<f64>, normalization: Normalization) -> Result<KernelOperator<f64>> {
    let grid = Arc::new(RadialGrid::from_spec(params.n, spec)?);
    KernelOperator::assemble(grid, params.alpha, normalization)
}

pub fn solve(cfg: &RunConfig, out: Option<&Path>) -> Result<()> {
    let params = cfg.params()?;
    let spec = cfg.grid_spec()?;
    let defaults = SolveConfig::<f64>::default();
    let solve_cfg = SolveConfig {
        damping: cfg.damping.unwrap_or(defaults.damping),
        max_iters: cfg.max_iters.unwrap_or(defaults.max_iters),
        tol: cfg.tol.unwrap_or(defaults.tol),
        normalize_at_origin: defaults.normalize_at_origin,
        residual_tol: cfg.residual_tol.unwrap_or(defaults.residual_tol),
    };
    let init = cfg.init.unwrap_or_default();
    let normalization = cfg.normalization();
    let config = json!({ "normalization": normalization, "init": init, "solver": solve_cfg });

    let op = operator(&params, spec, normalization)?;
    let guess = initial_guess(&params, op.grid(), init)?;
    let pair = solve_picard(&op, &params, guess, &solve_cfg)?;

    let mut report = base_report("solve", &params);
    report.insert("normalization".into(), to_value(&normalization));
    report.insert("iterations".into(), json!(pair.iterations));
    let (ru, rv) = oriented(&params, pair.residual_u, pair.residual_v);
    report.insert("residualU".into(), json!(ru));
    report.insert("residualV".into(), json!(rv));
    finish_pair_run("solve", out, &pair, spec, config, report, |p| write_pair_csv(p, &pair), SOLUTION_CSV)
}

pub fn singular(cfg: &RunConfig, out: Option<&Path>) -> Result<()> {
    let params = cfg.params()?;
    let spec = cfg.grid_spec()?;
    let normalization = cfg.normalization();
    let config = json!({ "normalization": normalization });
    let amps = singular_amplitudes(&params, normalization)?;
    let op = operator(&params, spec, normalization)?;
    let pair = singular_solution(&op, &params)?;

    let mut report = base_report("singular", &params);
    report.insert("normalization".into(), to_value(&normalization));
    let (a, b) = oriented(&params, amps.a, amps.b);
    let (theta_u, theta_v) = oriented(&params, params.slow_rate_u(), params.slow_rate_v());
    report.insert("amplitudeU".into(), json!(a));
    report.insert("amplitudeV".into(), json!(b));
    report.insert("exponentU".into(), json!(theta_u));
    report.insert("exponentV".into(), json!(theta_v));
    let (ru, rv) = oriented(&params, pair.residual_u, pair.residual_v);
    report.insert("residualU".into(), json!(ru));
    report.insert("residualV".into(), json!(rv));
    finish_pair_run("singular", out, &pair, spec, config, report, |p| write_pair_csv(p, &pair), SOLUTION_CSV)
}

fn shot_config(cfg: &RunConfig) -> ShotConfig<f64> {
    let d = ShotConfig::<f64>::default();
    ShotConfig {
        u0: cfg.u0.unwrap_or(d.u0),
        xi: cfg.xi.unwrap_or(d.xi),
        r_start: cfg.r_start.unwrap_or(d.r_start),
        r_end: cfg.r_end.unwrap_or(d.r_end),
        rtol: cfg.rtol.unwrap_or(d.rtol),
        atol: cfg.atol.unwrap_or(d.atol),
        samples_per_decade: cfg.samples_per_decade.unwrap_or(d.samples_per_decade),
    }
}

fn trajectory_json(params: &Params<f64>, traj: &Trajectory<f64>) -> Value {
    json!({
        "outcome": outcome_oriented(params, traj.outcome),
        "crossingRadius": traj.crossing_radius,
        "reach": traj.reach(),
        "steps": traj.steps,
        "samples": traj.samples.len(),
    })
}

fn sample_spec(shot: &ShotConfig<f64>, n: u32) -> Result<GridSpec<f64>> {
    Ok(shot.sample_grid(n)?.spec())
}

pub fn shoot_cmd(cfg: &RunConfig, out: Option<&Path>) -> Result<()> {
    let params = cfg.params()?;
    let shot = shot_config(cfg);
    // u0 and xi are the caller's u(0) and v(0).
    let (u0, xi) = oriented(&params, shot.u0, shot.xi);
    let canonical = ShotConfig { u0, xi, ..shot };
    let traj = shoot(&params, &canonical)?;
    let spec = sample_spec(&shot, params.n)?;

    let mut report = base_report("shoot", &params);
    report.insert("u0".into(), json!(shot.u0));
    report.insert("xi".into(), json!(shot.xi));
    report.insert("trajectory".into(), trajectory_json(&params, &traj));
    let report = Value::Object(report);
    if let Some(dir) = out {
        write_trajectory_csv(&out_file(dir, TRAJECTORY_CSV)?, &params, &traj)?;
        write_json(&out_file(dir, REPORT)?, &report)?;
        let manifest = RunManifest::new("shoot", &params, spec, json!({ "shot": shot }), vec![TRAJECTORY_CSV.into(), REPORT.into()]);
        write_json(&out_file(dir, MANIFEST)?, &manifest)?;
    }
    print(&report);
    Ok(())
}

pub fn bisect(cfg: &RunConfig, out: Option<&Path>) -> Result<()> {
    let params = cfg.params()?;
    if params.swapped {
        return Err(Error::Validation(
            "bisect varies v(0) with u(0) fixed and needs p <= q; exchange p and q (and the roles of u and v)".into(),
        ));
    }
    let shot = shot_config(cfg);
    let (lo, hi, iters) = (cfg.lo.unwrap_or(0.1), cfg.hi.unwrap_or(10.0), cfg.iters.unwrap_or(60));
    let result = bisect_ground_state(&params, lo, hi, iters, &shot)?;
    let config = json!({ "shot": shot, "lo": lo, "hi": hi, "iters": iters });

    let mut report = base_report("bisect", &params);
    report.insert("xi".into(), json!(result.xi));
    report.insert("bracket".into(), json!([result.lo, result.hi]));
    report.insert("outcomeLo".into(), json!(result.outcome_lo));
    report.insert("outcomeHi".into(), json!(result.outcome_hi));
    report.insert("iterations".into(), json!(result.iterations));
    report.insert("trajectory".into(), trajectory_json(&params, &result.trajectory));
    let traj = &result.trajectory;
    match trajectory_pair(&params, &shot, traj) {
        Ok(pair) => {
            let spec = pair.grid().spec();
            finish_pair_run("bisect", out, &pair, spec, config, report, |p| write_trajectory_csv(p, &params, traj), TRAJECTORY_CSV)
        }
        Err(e) => {
            report.insert("analysisError".into(), json!(e.to_string()));
            let report = Value::Object(report);
            if let Some(dir) = out {
                write_trajectory_csv(&out_file(dir, TRAJECTORY_CSV)?, &params, traj)?;
                write_json(&out_file(dir, REPORT)?, &report)?;
                let spec = sample_spec(&shot, params.n)?;
                let manifest = RunManifest::new("bisect", &params, spec, config, vec![TRAJECTORY_CSV.into(), REPORT.into()]);
                write_json(&out_file(dir, MANIFEST)?, &manifest)?;
            }
            print(&report);
            Ok(())
        }
    }
}

/// Groups of checks selectable in `analyze`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Focus {
    Envelope,
    SlowUpper,
    SlowExact,
    FastLimits,
}

impl Focus {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "1.1" | "envelope" => Ok(Focus::Envelope),
            "1.3" | "slow-upper" => Ok(Focus::SlowUpper),
            "1.4" | "slow" => Ok(Focus::SlowExact),
            "4" | "prop4" | "fast-limits" => Ok(Focus::FastLimits),
            other => Err(Error::Validation(format!(
                "unknown --theorem '{other}' (expected 1.1|envelope, 1.3|slow-upper, 1.4|slow, 4|fast-limits)"
            ))),
        }
    }

    fn prefixes(self) -> &'static [&'static str] {
        match self {
            Focus::Envelope => &["thm1.1-", "prop5.1-"],
            Focus::SlowUpper => &["thm1.3-"],
            Focus::SlowExact => &["thm1.4-"],
            Focus::FastLimits => &["prop4."],
        }
    }

    fn verdict(self, regime: Regime, selected: &Map<String, Value>) -> String {
        let all_pass = selected.values().all(|v| v.get("passed").and_then(Value::as_bool).unwrap_or(true));
        let (subject, empty) = match self {
            Focus::Envelope => ("rate envelope", "no envelope checks"),
            Focus::SlowUpper => ("slow upper bound", "not applicable: both components integrable"),
            Focus::SlowExact => ("slow rates", "not applicable: needs a supercritical, non-integrable pair"),
            Focus::FastLimits => ("fast-decay limits", "not applicable: pair is not fast-decaying"),
        };
        if selected.is_empty() {
            return if self == Focus::SlowExact && regime != Regime::Supercritical {
                format!("not applicable: regime is {regime:?}")
            } else {
                empty.to_string()
            };
        }
        format!("{subject} {}", if all_pass { "confirmed" } else { "not confirmed" })
    }
}

/// Rebuilds the pair of a finished run from its manifest and data file.
fn load_pair(dir: &Path) -> Result<(SolutionPair<f64>, Value)> {
    let text = std::fs::read_to_string(dir.join(MANIFEST)).map_err(|e| Error::Io(format!("{}: {e}", dir.join(MANIFEST).display())))?;
    let manifest: Value = serde_json::from_str(&text).map_err(|e| Error::Validation(format!("manifest: {e}")))?;
    let command = manifest["command"].as_str().unwrap_or_default().to_string();
    let p = &manifest["params"];
    let num = |v: &Value, key: &str| v[key].as_f64().ok_or_else(|| Error::Validation(format!("manifest lacks params.{key}")));
    let params = Params::new(num(p, "n")? as u32, num(p, "alpha")?, num(p, "p")?, num(p, "q")?)?;
    let (data, branch) = match command.as_str() {
        "solve" => (SOLUTION_CSV, Branch::PicardFixedPoint),
        "singular" => (SOLUTION_CSV, Branch::SingularPowerLaw),
        "shoot" | "bisect" => (TRAJECTORY_CSV, Branch::Shooting),
        other => return Err(Error::Validation(format!("cannot analyze a '{other}' run"))),
    };
    let normalization: Normalization = match manifest["config"].get("normalization") {
        Some(v) => serde_json::from_value(v.clone()).map_err(|e| Error::Validation(format!("manifest normalization: {e}")))?,
        None => Normalization::Laplacian,
    };
    let (header, rows) = output::read_csv(&dir.join(data))?;
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Validation(format!("{data} has no column '{name}'")))
    };
    let (ir, iu, iv) = (col("r")?, col("u")?, col("v")?);
    if rows.len() < 16 {
        return Err(Error::Validation(format!("{data} holds {} rows, need at least 16", rows.len())));
    }
    let radii: Vec<f64> = rows.iter().map(|r| r[ir]).collect();
    let grid = Arc::new(RadialGrid::log(params.n, radii[0], *radii.last().unwrap(), radii.len())?);
    if grid.nodes().iter().zip(&radii).any(|(a, b)| (a / b - 1.0).abs() > 1e-12) {
        return Err(Error::Validation(format!("{data}: radii are not a logarithmic grid")));
    }
    let column = |i: usize| rows.iter().map(|r| r[i]).collect::<Vec<f64>>();
    let (u, v) = oriented(&params, column(iu), column(iv));
    let mut u = RadialField::new(grid.clone(), u, None)?;
    let mut v = RadialField::new(grid, v, None)?;
    for f in [&mut u, &mut v] {
        let fit = fit_default(f)?;
        if fit.exponent > 0.0 {
            f.set_tail(Some(TailModel::with_log(fit.exponent, fit.log_power as f64)));
        }
    }
    let pair = SolutionPair {
        u,
        v,
        params,
        normalization,
        iterations: 0,
        residual_u: None,
        residual_v: None,
        branch,
    };
    Ok((pair, manifest))
}

pub fn analyze(dir: &Path, theorem: &str, out: Option<&Path>) -> Result<()> {
    let focus = Focus::parse(theorem)?;
    let (pair, manifest) = load_pair(dir)?;
    let analysis = Analysis::of(&pair)?;
    let selected: Map<String, Value> = analysis
        .checks()
        .into_iter()
        .filter(|(k, _)| focus.prefixes().iter().any(|p| k.starts_with(p)))
        .collect();
    let (fu, fv) = oriented(&pair.params, &analysis.envelope.fit_u, &analysis.envelope.fit_v);
    let verdict = focus.verdict(analysis.regime.regime, &selected);
    let report = json!({
        "command": "analyze",
        "source": dir.display().to_string(),
        "sourceConfigHash": manifest["configHash"],
        "theorem": theorem,
        "params": params_json(&pair.params),
        "regime": regime_json(&pair.params, &analysis.regime),
        "exponents": [fu.exponent, fv.exponent],
        "selected": selected,
        "verdict": verdict,
        "analysis": analysis.json(),
    });
    let target = out.unwrap_or(dir);
    let name = format!("analysis-{}.json", theorem.replace(['/', '\\'], "_"));
    write_json(&out_file(target, &name)?, &report)?;
    fits_csv(&out_file(target, FITS_CSV)?, &pair.params, &analysis.envelope.fit_u, &analysis.envelope.fit_v)?;
    print(&report);
    Ok(())
}

/// Runs the acceptance suite; returns whether every selected criterion passed.
pub fn verify_all(only: &[String], seed: Option<u64>, out: Option<&Path>) -> Result<bool> {
    let ids = verify::resolve(only)?;
    let mut suite = Suite::new(seed.unwrap_or(verify::DEFAULT_SEED));
    if seed.is_some() {
        suite = suite.with_monte_carlo(MC_SAMPLES);
    }
    println!("{:<4} {:<12} {:<6} {:>10} {:>10}  check", "id", "criterion", "status", "measured", "tolerance");
    let mut reports = Vec::new();
    for id in ids {
        let report = suite.run_one(id);
        for c in &report.checks {
            println!(
                "{:<4} {:<12} {:<6} {:>10.3e} {:>10.1e}  {} (expected {})",
                report.id,
                report.name,
                if c.passed { "PASS" } else { "FAIL" },
                c.measured,
                c.tolerance,
                c.label,
                c.expected
            );
        }
        if let Some(e) = &report.error {
            println!("{:<4} {:<12} FAIL   error: {e}", report.id, report.name);
        }
        reports.push(report);
    }
    println!();
    for r in &reports {
        println!("{}", r.summary_line());
    }
    let passed = reports.iter().all(|r| r.passed);
    if let Some(dir) = out {
        let path: PathBuf = out_file(dir, "verify.json")?;
        write_json(&path, &json!({ "passed": passed, "seed": seed, "criteria": reports }))?;
    }
    Ok(passed)
}
