use hls_core::exponents::Params;
use hls_core::oracle;
use hls_core::shooting::{bisect_ground_state, integrate_radial, shoot, trajectory_pair, ShotConfig};
use hls_core::Error;

fn params(n: u32, p: f64, q: f64) -> Params<f64> {
    Params::new(n, 2.0, p, q).unwrap()
}

fn cfg_to(r_end: f64, xi: f64) -> ShotConfig<f64> {
    ShotConfig { r_end, ..ShotConfig::default() }.with_xi(xi)
}

#[test]
fn agrees_with_fixed_step_rk4() {
    let pr = params(5, 3.0, 3.0);
    for xi in [0.9, 1.1] {
        let cfg = cfg_to(2.0, xi);
        let traj = shoot(&pr, &cfg).unwrap();
        assert!(!traj.outcome.is_crossing());
        let last = traj.samples.last().unwrap();
        assert!((last.r - 2.0).abs() < 1e-12);
        let (u, v) = oracle::rk4_lane_emden(5, 3.0, 3.0, 1.0, xi, cfg.r_start, last.r, 40_000).unwrap();
        assert!((last.u - u).abs() < 1e-6 && (last.v - v).abs() < 1e-6, "xi={xi}: ({}, {}) vs ({u}, {v})", last.u, last.v);
    }
}

#[test]
fn zero_source_keeps_the_initial_values() {
    let cfg = ShotConfig::default().with_xi(0.25);
    let traj = integrate_radial(4, &cfg, |_, _| (0.0, 0.0)).unwrap();
    for s in &traj.samples {
        assert_eq!((s.u, s.du, s.v, s.dv), (1.0, 0.0, 0.25, 0.0));
    }
}

#[test]
fn series_start_is_converged() {
    let pr = params(5, 3.0, 3.0);
    let a = shoot(&pr, &cfg_to(1.0, 1.2)).unwrap();
    let halved = ShotConfig { r_start: 5e-7, ..cfg_to(1.0, 1.2) };
    let b = shoot(&pr, &halved).unwrap();
    let (ua, ub) = (a.samples.last().unwrap().u, b.samples.last().unwrap().u);
    assert!((ua - ub).abs() < 1e-8, "{ua} vs {ub}");
}

#[test]
fn profiles_decrease_while_positive() {
    let pr = params(6, 2.0, 4.0);
    for xi in [0.3, 1.0, 4.0] {
        let traj = shoot(&pr, &ShotConfig::default().with_xi(xi)).unwrap();
        for s in traj.samples.iter().filter(|s| s.u > 0.0 && s.v > 0.0) {
            assert!(s.du <= 0.0 && s.dv <= 0.0, "xi={xi} r={}", s.r);
        }
    }
}

#[test]
fn scaling_maps_trajectories_onto_each_other() {
    let pr = params(5, 3.0, 3.0);
    let (t1, t2) = (pr.slow_rate_u(), pr.slow_rate_v());
    let (lambda, xi) = (2.0_f64, 1.3);
    let a = shoot(&pr, &cfg_to(1.0, xi)).unwrap();
    let scaled = ShotConfig {
        u0: lambda.powf(t1),
        xi: lambda.powf(t2) * xi,
        r_start: 1e-6 / lambda,
        r_end: 1.0 / lambda,
        ..ShotConfig::default()
    };
    let b = shoot(&pr, &scaled).unwrap();
    let (sa, sb) = (a.samples.last().unwrap(), b.samples.last().unwrap());
    assert!((sb.u / (lambda.powf(t1) * sa.u) - 1.0).abs() < 1e-8);
    assert!((sb.v / (lambda.powf(t2) * sa.v) - 1.0).abs() < 1e-8);
}

#[test]
fn bisection_with_no_iterations_keeps_the_bracket() {
    let pr = params(5, 3.0, 3.0);
    let res = bisect_ground_state(&pr, 0.5, 2.0, 0, &ShotConfig::default()).unwrap();
    assert_eq!((res.lo, res.hi, res.iterations), (0.5, 2.0, 0));
    assert_ne!(res.outcome_lo, res.outcome_hi);
}

#[test]
fn bisection_finds_the_ground_state() {
    let pr = params(5, 3.0, 3.0);
    let cfg = ShotConfig::default();
    let res = bisect_ground_state(&pr, 0.5, 2.0, 60, &cfg).unwrap();
    assert!((res.xi - 1.0).abs() < 1e-3, "xi* = {}", res.xi);
    let pair = trajectory_pair(&pr, &cfg, &res.trajectory).unwrap();
    let fit = hls_core::decay::fit_default(&pair.u).unwrap();
    assert!((fit.exponent - 1.0).abs() < 0.05);
}

#[test]
fn rejects_bad_brackets_and_orders() {
    let pr = params(5, 3.0, 3.0);
    let cfg = ShotConfig::default();
    assert!(matches!(bisect_ground_state(&pr, 0.5, 0.6, 10, &cfg), Err(Error::InvalidBracket(_))));
    assert!(matches!(bisect_ground_state(&pr, 2.0, 1.0, 10, &cfg), Err(Error::InvalidBracket(_))));
    let fractional = Params::new(5, 1.5, 3.0, 3.0).unwrap();
    assert!(shoot(&fractional, &cfg).unwrap_err().is_validation());
    assert!(shoot(&pr, &ShotConfig { r_end: 1e-3, ..cfg }).unwrap_err().is_validation());
}

#[test]
fn short_crossing_trajectories_are_not_packed() {
    // Subcritical: every shot crosses zero, here near r = 16.
    let pr = params(4, 2.0, 4.0);
    let cfg = ShotConfig::default();
    let traj = shoot(&pr, &cfg).unwrap();
    assert!(traj.outcome.is_crossing());
    assert!(matches!(trajectory_pair(&pr, &cfg, &traj), Err(Error::Precondition(_))));
}
