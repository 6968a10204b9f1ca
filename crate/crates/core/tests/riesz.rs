use std::f64::consts::PI;
use std::sync::Arc;

use hls_core::oracle;
use hls_core::riesz::{angular_kernel, power_law_constant, KernelOperator, Normalization, RadialField, RadialGrid, TailModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn operator(n: u32, alpha: f64, r_min: f64, r_max: f64, count: usize) -> KernelOperator<f64> {
    let grid = Arc::new(RadialGrid::log(n, r_min, r_max, count).unwrap());
    KernelOperator::assemble(grid, alpha, Normalization::Plain).unwrap()
}

#[test]
fn grid_weights_reproduce_the_radial_measure() {
    for n in [3, 4, 7] {
        let grid = RadialGrid::log(n, 1e-3, 50.0, 200).unwrap();
        assert!(grid.weights().iter().all(|&w| w > 0.0));
        let exact = (50f64.powi(n as i32) - 1e-3f64.powi(n as i32)) / n as f64;
        let got = grid.integrate(&vec![1.0; grid.len()]);
        assert!((got / exact - 1.0).abs() < 1e-10, "n={n}: {got} vs {exact}");
    }
}

#[test]
fn newtonian_kernel_in_three_dimensions() {
    let k = angular_kernel(1.0, 2.0, 3, 2.0).unwrap();
    assert!((k - 2.0 * PI).abs() < 1e-10 * 2.0 * PI);
    for (r, s) in [(0.3, 0.7), (5.0, 1.5), (1.0, 1.001)] {
        let exact = 4.0 * PI * f64::min(r, s) / (r * s);
        assert!((angular_kernel(r, s, 3, 2.0).unwrap() / exact - 1.0).abs() < 1e-10);
    }
}

#[test]
fn kernel_is_symmetric() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let r = rng.random_range(0.01..100.0);
        let s = rng.random_range(0.01..100.0);
        let n = rng.random_range(3..8u32);
        let alpha = rng.random_range(1.1..(n as f64 - 0.1));
        let a = angular_kernel(r, s, n, alpha).unwrap();
        let b = angular_kernel(s, r, n, alpha).unwrap();
        assert!((a / b - 1.0).abs() < 1e-9, "K({r},{s}) = {a} vs {b}");
    }
}

#[test]
fn kernel_matches_hypergeometric_series() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut compared = 0;
    while compared < 40 {
        let n = rng.random_range(3..9u32);
        let alpha = rng.random_range(1.1..(n as f64 - 0.1));
        let r = rng.random_range(0.1..10.0);
        let s = rng.random_range(0.1..10.0);
        if let Some(series) = oracle::hypergeometric_kernel(r, s, n, alpha) {
            let k = angular_kernel(r, s, n, alpha).unwrap();
            assert!((k / series - 1.0).abs() < 1e-9, "n={n} alpha={alpha} r={r} s={s}: {k} vs {series}");
            compared += 1;
        }
    }
}

#[test]
fn unit_ball_indicator_in_three_dimensions() {
    // Constant 1 on the ball (the operator extends it down to 0): the Newtonian
    // potential is 2 pi (1 - r^2 / 3) inside.
    let op = operator(3, 2.0, 1e-3, 1.0, 256);
    let f = RadialField::from_fn(op.grid().clone(), None, |_| 1.0).unwrap();
    let g = op.apply(&f).unwrap();
    for (&r, &value) in op.grid().nodes().iter().zip(g.values()) {
        let exact = 2.0 * PI * (1.0 - r * r / 3.0);
        assert!((value / exact - 1.0).abs() < 1e-8, "r={r}: {value} vs {exact}");
    }
    assert!((g.values()[0] / (2.0 * PI * (1.0 - 1e-6 / 3.0)) - 1.0).abs() < 1e-10);
}

#[test]
fn image_of_a_positive_field_is_positive_and_monotone() {
    let op = operator(4, 2.5, 1e-3, 1e3, 200);
    let grid = op.grid().clone();
    let f1 = RadialField::from_fn(grid.clone(), Some(TailModel::power(4.0)), |r| (1.0 + r * r).powi(-2)).unwrap();
    let f2 = RadialField::from_fn(grid.clone(), Some(TailModel::power(4.0)), |r| {
        (1.0 + r * r).powi(-2) * (1.0 + (-(r.ln() - 1.0).powi(2)).exp())
    })
    .unwrap();
    let g1 = op.apply(&f1).unwrap();
    let g2 = op.apply(&f2).unwrap();
    for (a, b) in g1.values().iter().zip(g2.values()) {
        assert!(*a > 0.0 && a <= b);
    }
    assert!(op.apply(&RadialField::zeros(grid)).unwrap().values().iter().all(|&x| x == 0.0));
}

/// `<g, I f> - <f, I g>` in the measure `r^{n-1} dr`; zero for the exact
/// operator, fourth order in the log step for the discretization.
fn adjoint_defect(count: usize) -> f64 {
    let op = operator(5, 2.0, 1e-4, 1e4, count);
    let grid = op.grid().clone();
    let f = RadialField::from_fn(grid.clone(), None, |r: f64| (-r * r).exp()).unwrap();
    let g = RadialField::from_fn(grid.clone(), None, |r: f64| (-(r - 1.0).powi(2)).exp()).unwrap();
    let if_ = op.apply(&f).unwrap();
    let ig = op.apply(&g).unwrap();
    let lhs: Vec<f64> = g.values().iter().zip(if_.values()).map(|(a, b)| a * b).collect();
    let rhs: Vec<f64> = f.values().iter().zip(ig.values()).map(|(a, b)| a * b).collect();
    (grid.integrate(&lhs) / grid.integrate(&rhs) - 1.0).abs()
}

#[test]
fn operator_is_symmetric_in_the_radial_measure() {
    let (coarse, fine) = (adjoint_defect(256), adjoint_defect(512));
    assert!(fine < 5e-6, "{fine}");
    assert!(fine < coarse / 12.0, "{coarse} -> {fine}");
}

#[test]
fn scaling_covariance() {
    let (n, alpha) = (4, 2.0);
    let op = operator(n, alpha, 1e-4, 1e4, 256);
    let f = |s: f64| (1.0 + s * s).powf(-1.5);
    let base = RadialField::from_fn(op.grid().clone(), Some(TailModel::power(3.0)), f).unwrap();
    let g = op.apply(&base).unwrap();
    for lambda in [2.0, 4.0] {
        let grid = Arc::new(op.grid().scaled(1.0 / lambda).unwrap());
        let scaled_op = KernelOperator::assemble(grid.clone(), alpha, Normalization::Plain).unwrap();
        let fl = RadialField::from_fn(grid.clone(), Some(TailModel::power(3.0)), |s| f(lambda * s)).unwrap();
        let gl = scaled_op.apply(&fl).unwrap();
        for (i, &value) in gl.values().iter().enumerate() {
            let expected = lambda.powf(-alpha) * g.values()[i];
            assert!((value / expected - 1.0).abs() < 1e-6);
        }
    }
}

#[test]
fn power_law_error_drops_under_refinement() {
    let (n, alpha, beta) = (5, 2.0, 3.0);
    let closed = power_law_constant(n, alpha, beta).unwrap();
    assert!((closed - 4.0 * PI * PI).abs() < 1e-10);
    let err = |count| {
        let op = operator(n, alpha, 1e-4, 1e4, count);
        let f = RadialField::from_fn(op.grid().clone(), Some(TailModel::power(beta)), |s| s.powf(-beta)).unwrap();
        let g = op.apply(&f).unwrap();
        // Away from r_min, where the constant inner extension of s^{-beta} is felt.
        let grid = op.grid();
        (0..grid.len())
            .filter(|&i| (0.1..=100.0).contains(&grid.nodes()[i]))
            .map(|i| (g.values()[i] * grid.nodes()[i] / closed - 1.0).abs())
            .fold(0.0, f64::max)
    };
    let (coarse, fine) = (err(256), err(512));
    assert!(fine < coarse / 8.0, "{coarse} -> {fine}");
}

#[test]
fn laplacian_normalization_rescales_the_plain_operator() {
    let plain = operator(5, 2.0, 1e-2, 1e2, 64);
    let lap = plain.renormalized(Normalization::Laplacian);
    let c = Normalization::Laplacian.constant(5, 2.0);
    // (-Delta)^{-1} in R^5 has kernel |x|^{-3} / (3 |S^4|).
    assert!((c - 1.0 / (3.0 * 8.0 * PI * PI / 3.0)).abs() < 1e-14);
    assert!((lap.entry(3, 7) - c * plain.entry(3, 7)).abs() < 1e-15);
}

#[test]
fn rejects_mismatched_grids_and_bad_exponents() {
    let op = operator(3, 2.0, 1e-2, 1e2, 32);
    let other = Arc::new(RadialGrid::log(3, 1e-2, 1e3, 32).unwrap());
    assert!(op.apply(&RadialField::zeros(other)).is_err());
    let f = RadialField::from_fn(op.grid().clone(), Some(TailModel::power(1.5)), |s| s.powf(-1.5)).unwrap();
    assert!(matches!(op.apply(&f), Err(hls_core::Error::DivergentTail { .. })));
    assert!(KernelOperator::assemble(op.grid().clone(), 3.0, Normalization::Plain).is_err());
}

#[test]
fn small_alpha_power_law() {
    // alpha <= 1: the pointwise kernel is infinite on the diagonal, the cell moments are not.
    let (n, alpha, beta) = (4, 0.8, 2.0);
    let closed = oracle::power_law_closed_form(n, alpha, beta);
    assert!((power_law_constant(n, alpha, beta).unwrap() / closed - 1.0).abs() < 1e-10);
    let op = operator(n, alpha, 1e-4, 1e4, 256);
    let f = RadialField::from_fn(op.grid().clone(), Some(TailModel::power(beta)), |s: f64| s.powf(-beta)).unwrap();
    let g = op.apply(&f).unwrap();
    for i in op.grid().interior() {
        let r = op.grid().nodes()[i];
        assert!((g.values()[i] * r.powf(beta - alpha) / closed - 1.0).abs() < 1e-3);
    }
    assert!(angular_kernel(1.0, 1.0, n, alpha).is_err());
}
