use std::sync::Arc;

use hls_core::exponents::Params;
use hls_core::oracle;
use hls_core::riesz::{KernelOperator, Normalization, RadialGrid};
use hls_core::solver::{
    default_init, dilate, fixed_point_residuals, initial_guess, singular_amplitudes, singular_solution, solve_picard, solve_picard_observed,
    Branch, InitRates, SolveConfig,
};
use hls_core::Error;

fn operator(n: u32, alpha: f64, count: usize) -> KernelOperator<f64> {
    let grid = Arc::new(RadialGrid::log(n, 1e-4, 1e4, count).unwrap());
    KernelOperator::assemble(grid, alpha, Normalization::Laplacian).unwrap()
}

#[test]
fn critical_bubble_in_four_dimensions() {
    let params = Params::<f64>::new(4, 2.0, 3.0, 3.0).unwrap();
    let op = operator(4, 2.0, 1024);
    let init = initial_guess(&params, op.grid(), InitRates::Fast).unwrap();
    let cfg = SolveConfig { residual_tol: 1e-6, ..SolveConfig::default() };
    let pair = solve_picard(&op, &params, init, &cfg).unwrap();
    assert_eq!(pair.branch, Branch::PicardFixedPoint);
    assert!(pair.residual_u.unwrap() <= 1e-6 && pair.residual_v.unwrap() <= 1e-6);

    // -Lap w = w^3 in R^4 for w = 1 / (1 + r^2 / 8), the bubble with w(0) = 1.
    let w = |r: f64| 1.0 / (1.0 + r * r / 8.0);
    for r in [0.1, 1.0, 3.0, 30.0] {
        let fd = oracle::radial_laplacian_fd(w, r, 4, 1e-4);
        assert!(((fd + w(r).powi(3)) / w(r).powi(3)).abs() < 1e-6);
    }
    let grid = op.grid();
    let ratios: Vec<f64> = grid.nodes().iter().zip(pair.u.values()).map(|(&r, &u)| u / w(r)).collect();
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    assert!(ratios.iter().all(|x| (x / mean - 1.0).abs() < 0.03));
    for (a, b) in pair.u.values().iter().zip(pair.v.values()) {
        assert!((a / b - 1.0).abs() < 1e-8);
    }
    let fit = hls_core::decay::fit_default(&pair.u).unwrap();
    assert!((fit.exponent - 2.0).abs() < 0.04);
}

#[test]
fn picard_iterates_stay_radially_nonincreasing() {
    let params = Params::<f64>::new(4, 2.0, 3.0, 3.0).unwrap();
    let op = operator(4, 2.0, 256);
    let init = initial_guess(&params, op.grid(), InitRates::Fast).unwrap();
    let mut sweeps = 0;
    let mut worst: f64 = 0.0;
    solve_picard_observed(&op, &params, init, &SolveConfig::default(), |_, u, v| {
        sweeps += 1;
        for f in [u, v] {
            for w in f.values().windows(2) {
                worst = worst.max((w[1] - w[0]) / w[0]);
            }
        }
    })
    .unwrap();
    assert!(sweeps > 0);
    assert!(worst <= 1e-12, "largest relative increase {worst}");
}

#[test]
fn slow_default_init_still_solves_the_four_dimensional_system() {
    let params = Params::<f64>::new(4, 2.0, 3.0, 3.0).unwrap();
    let op = operator(4, 2.0, 256);
    let init = default_init(&params, op.grid()).unwrap();
    let pair = solve_picard(&op, &params, init, &SolveConfig::default()).unwrap();
    assert!(pair.residual_u.unwrap() < 1e-4);
}

#[test]
fn dilations_of_a_solution_remain_solutions() {
    let params = Params::<f64>::new(4, 2.0, 3.0, 3.0).unwrap();
    let op = operator(4, 2.0, 512);
    let init = initial_guess(&params, op.grid(), InitRates::Fast).unwrap();
    let pair = solve_picard(&op, &params, init, &SolveConfig::default()).unwrap();
    let theta = params.slow_rate_u();
    for lambda in [0.5, 2.0] {
        let u = dilate(&pair.u, lambda, theta).unwrap();
        let v = dilate(&pair.v, lambda, params.slow_rate_v()).unwrap();
        let (ru, rv) = fixed_point_residuals(&op, &params, &u, &v).unwrap();
        assert!(ru < 1e-4 && rv < 1e-4, "lambda={lambda}: {ru}, {rv}");
    }
}

#[test]
fn zero_iterations_report_nonconvergence() {
    let params = Params::<f64>::new(4, 2.0, 3.0, 3.0).unwrap();
    let op = operator(4, 2.0, 64);
    let init = initial_guess(&params, op.grid(), InitRates::Fast).unwrap();
    let cfg = SolveConfig { max_iters: 0, ..SolveConfig::default() };
    match solve_picard(&op, &params, init, &cfg) {
        Err(Error::NonConvergence { .. }) => {}
        other => panic!("expected non-convergence, got {other:?}"),
    }
}

#[test]
fn supercritical_picard_is_not_accepted() {
    let params = Params::<f64>::new(5, 2.0, 2.0, 8.0).unwrap();
    let op = operator(5, 2.0, 128);
    let init = initial_guess(&params, op.grid(), InitRates::Fast).unwrap();
    assert!(solve_picard(&op, &params, init, &SolveConfig::default()).is_err());
}

#[test]
fn invalid_configuration_is_a_validation_error() {
    let params = Params::<f64>::new(4, 2.0, 3.0, 3.0).unwrap();
    let op = operator(4, 2.0, 64);
    let init = initial_guess(&params, op.grid(), InitRates::Fast).unwrap();
    let cfg = SolveConfig { damping: 1.5, ..SolveConfig::default() };
    assert!(solve_picard(&op, &params, init, &cfg).unwrap_err().is_validation());
}

#[test]
fn singular_pair_is_an_exact_power_law() {
    let params = Params::<f64>::new(5, 2.0, 3.0, 3.0).unwrap();
    let op = operator(5, 2.0, 256);
    let pair = singular_solution(&op, &params).unwrap();
    assert_eq!(pair.branch, Branch::SingularPowerLaw);
    let sqrt2 = 2f64.sqrt();
    for (&r, (&u, &v)) in op.grid().nodes().iter().zip(pair.u.values().iter().zip(pair.v.values())) {
        assert!((u * r / sqrt2 - 1.0).abs() < 1e-12);
        assert!((v * r / sqrt2 - 1.0).abs() < 1e-12);
    }
    // Invariant under the scaling lambda^theta f(lambda r).
    for lambda in [0.3, 7.0] {
        let du = dilate(&pair.u, lambda, params.slow_rate_u()).unwrap();
        let grid = op.grid();
        for (i, (a, b)) in du.values().iter().zip(pair.u.values()).enumerate() {
            // Off-node values come from cubic interpolation in ln r.
            if lambda * grid.nodes()[i] >= grid.r_min() {
                assert!((a / b - 1.0).abs() < 1e-6);
            }
        }
    }
}

#[test]
fn singular_amplitudes_solve_the_power_law_system() {
    let params = Params::<f64>::new(6, 2.0, 2.0, 4.0).unwrap();
    let amps = singular_amplitudes(&params, Normalization::Laplacian).unwrap();
    assert!((amps.a / (amps.c_u * amps.b.powf(params.q)) - 1.0).abs() < 1e-12);
    assert!((amps.b / (amps.c_v * amps.a.powf(params.p)) - 1.0).abs() < 1e-12);
    let (a, b) = oracle::amplitude_contraction(amps.c_u, amps.c_v, params.p, params.q);
    assert!((a / amps.a - 1.0).abs() < 1e-10 && (b / amps.b - 1.0).abs() < 1e-10);
}

#[test]
fn singular_pair_needs_admissible_powers() {
    // Subcritical exponents put q theta2 = 8.25 beyond n = 4.
    let params = Params::<f64>::new(4, 2.0, 1.2, 1.5).unwrap();
    assert!(matches!(singular_amplitudes(&params, Normalization::Laplacian), Err(Error::PowerLawRange { .. })));
}
