use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use crate::real::Real;

/// `(r_min, r_max, count)` triple that fully determines a logarithmic grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", bound = "T: Real")]
pub struct GridSpec<T> {
    pub r_min: T,
    pub r_max: T,
    pub count: usize,
}

impl Default for GridSpec<f64> {
    fn default() -> Self {
        Self {
            r_min: 1e-4,
            r_max: 1e4,
            count: 512,
        }
    }
}

/// Logarithmically spaced radii `r_j = r_min e^{j h}` with quadrature weights
/// for `int g(s) s^{n-1} ds` over `[r_min, r_max]`.
///
/// The weights integrate the piecewise-cubic interpolant of `g` (in `ln s`)
/// against the exact measure `s^{n-1} ds`, so constants are reproduced to
/// rounding error.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid<T> {
    spec: GridSpec<T>,
    dim: u32,
    log_step: T,
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> RadialGrid<T> {
    pub fn log(dim: u32, r_min: T, r_max: T, count: usize) -> Result<Self> {
        Self::from_spec(dim, GridSpec { r_min, r_max, count })
    }

    pub fn from_spec(dim: u32, spec: GridSpec<T>) -> Result<Self> {
        let GridSpec { r_min, r_max, count } = spec;
        if !(r_min > T::zero() && r_max > r_min && r_max.is_finite()) {
            return Err(Error::Validation(format!(
                "grid needs 0 < rMin < rMax, got rMin = {r_min}, rMax = {r_max}"
            )));
        }
        if count < 16 {
            return Err(Error::Validation(format!("grid count {count} below the minimum of 16")));
        }
        if dim == 0 {
            return Err(Error::Validation("grid dimension must be positive".into()));
        }
        let log_min = r_min.ln();
        let log_step = (r_max.ln() - log_min) / T::from_usize_lossy(count - 1);
        let mut nodes: Vec<T> = (0..count)
            .map(|j| (log_min + T::from_usize_lossy(j) * log_step).exp())
            .collect();
        nodes[0] = r_min;
        nodes[count - 1] = r_max;
        let weights = measure_weights(dim, log_min, log_step, count);
        Ok(Self {
            spec,
            dim,
            log_step,
            nodes,
            weights,
        })
    }

    pub fn spec(&self) -> GridSpec<T> {
        self.spec
    }
    pub fn dim(&self) -> u32 {
        self.dim
    }
    pub fn r_min(&self) -> T {
        self.spec.r_min
    }
    pub fn r_max(&self) -> T {
        self.spec.r_max
    }
    pub fn len(&self) -> usize {
        self.nodes.len()
    }
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
    /// Spacing in `ln r`.
    pub fn log_step(&self) -> T {
        self.log_step
    }
    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }
    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// `int_{r_min}^{r_max} g(s) s^{n-1} ds` for samples of `g` on the nodes.
    pub fn integrate(&self, samples: &[T]) -> T {
        assert_eq!(samples.len(), self.len());
        samples.iter().zip(&self.weights).map(|(&g, &w)| g * w).sum()
    }

    /// Fractional node position of `r` (`0` at `r_min`), unclamped.
    pub fn position(&self, r: T) -> T {
        (r / self.spec.r_min).ln() / self.log_step
    }

    /// Indices of the middle 50% of nodes, where truncation effects are smallest.
    pub fn interior(&self) -> std::ops::Range<usize> {
        let n = self.len();
        n / 4..n - n / 4
    }

    /// The same grid with every radius multiplied by `factor`.
    pub fn scaled(&self, factor: T) -> Result<Self> {
        Self::log(
            self.dim,
            self.spec.r_min * factor,
            self.spec.r_max * factor,
            self.spec.count,
        )
    }
}

/// Piecewise-cubic Lagrange interpolation in `ln r` on cell `c` uses nodes
/// `start(c) .. start(c) + 4`.
pub(crate) fn stencil_start(cell: usize, count: usize) -> usize {
    cell.saturating_sub(1).min(count - 4)
}

/// Monomial coefficients (in the cell coordinate `x in [0, 1]`) of the four
/// Lagrange basis polynomials of cell `c`: `basis[m][k]` multiplies `x^k`.
pub(crate) fn cubic_basis(cell: usize, count: usize) -> [[f64; 4]; 4] {
    let start = stencil_start(cell, count) as f64;
    let offsets: [f64; 4] = std::array::from_fn(|m| start + m as f64 - cell as f64);
    let mut basis = [[0.0; 4]; 4];
    for m in 0..4 {
        let mut poly = [1.0, 0.0, 0.0, 0.0];
        let mut denom = 1.0;
        for k in 0..4 {
            if k == m {
                continue;
            }
            // poly *= (x - o_k)
            let mut next = [0.0; 4];
            for d in 0..3 {
                next[d + 1] += poly[d];
                next[d] -= offsets[k] * poly[d];
            }
            poly = next;
            denom *= offsets[m] - offsets[k];
        }
        for k in 0..4 {
            basis[m][k] = poly[k] / denom;
        }
    }
    basis
}

fn measure_weights<T: Real>(dim: u32, log_min: T, h: T, count: usize) -> Vec<T> {
    let gl = GaussLegendre::<T>::new(12);
    let a = T::from_u32(dim).unwrap() * h;
    let base: [T; 4] =
        std::array::from_fn(|k| gl.integrate(|x| (a * x).exp() * x.powi(k as i32), T::zero(), T::one()));
    let mut weights = vec![T::zero(); count];
    for cell in 0..count - 1 {
        let scale = h * (T::from_u32(dim).unwrap() * (log_min + T::from_usize_lossy(cell) * h)).exp();
        let start = stencil_start(cell, count);
        let basis = cubic_basis(cell, count);
        for (m, coeffs) in basis.iter().enumerate() {
            let w: T = coeffs.iter().zip(&base).map(|(&c, &mu)| T::lit(c) * mu).sum();
            weights[start + m] = weights[start + m] + scale * w;
        }
    }
    weights
}

/// Cubic interpolation in `ln r` of arbitrary per-node data.
pub(crate) fn interpolate<T: Real>(grid: &RadialGrid<T>, data: &[T], r: T) -> T {
    let count = grid.len();
    let pos = grid.position(r).max(T::zero()).min(T::from_usize_lossy(count - 1));
    let cell = pos.floor().to_usize().unwrap_or(0).min(count - 2);
    let x = pos - T::from_usize_lossy(cell);
    let start = stencil_start(cell, count);
    let basis = cubic_basis(cell, count);
    basis
        .iter()
        .enumerate()
        .map(|(m, c)| {
            let l = T::lit(c[0]) + x * (T::lit(c[1]) + x * (T::lit(c[2]) + x * T::lit(c[3])));
            l * data[start + m]
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_are_log_spaced_with_exact_ends() {
        let g = RadialGrid::<f64>::log(5, 1e-4, 1e4, 512).unwrap();
        assert_eq!(g.nodes()[0], 1e-4);
        assert_eq!(g.nodes()[511], 1e4);
        assert!(g.nodes().windows(2).all(|w| w[1] > w[0]));
        let ratio = g.nodes()[1] / g.nodes()[0];
        assert!((g.nodes()[300] / g.nodes()[299] - ratio).abs() < 1e-12);
    }

    #[test]
    fn weights_reproduce_the_measure() {
        for dim in [3u32, 4, 5, 7] {
            let g = RadialGrid::<f64>::log(dim, 1e-4, 1e4, 512).unwrap();
            assert!(g.weights().iter().all(|&w| w > 0.0));
            let ones = vec![1.0; g.len()];
            let exact = (1e4f64.powi(dim as i32) - 1e-4f64.powi(dim as i32)) / dim as f64;
            let got = g.integrate(&ones);
            assert!(((got - exact) / exact).abs() < 1e-10, "dim {dim}: {got} vs {exact}");
        }
    }

    #[test]
    fn weights_converge_at_fourth_order_on_power_laws() {
        let exact = (1e2f64.powf(1.5) - 1e-2f64.powf(1.5)) / 1.5;
        let err = |count: usize| {
            let g = RadialGrid::<f64>::log(4, 1e-2, 1e2, count).unwrap();
            let f: Vec<f64> = g.nodes().iter().map(|r| r.powf(-2.5)).collect();
            ((g.integrate(&f) - exact) / exact).abs()
        };
        let (coarse, fine) = (err(256), err(511));
        assert!(coarse < 1e-5, "{coarse}");
        assert!(fine < coarse / 10.0, "{coarse} -> {fine}");
    }

    #[test]
    fn lagrange_basis_is_a_partition_of_unity() {
        for cell in [0usize, 1, 7, 14] {
            let b = cubic_basis(cell, 16);
            for k in 0..4 {
                let s: f64 = b.iter().map(|row| row[k]).sum();
                assert!((s - if k == 0 { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(RadialGrid::<f64>::log(3, 0.0, 1.0, 32).is_err());
        assert!(RadialGrid::<f64>::log(3, 1.0, 1.0, 32).is_err());
        assert!(RadialGrid::<f64>::log(3, 1e-3, 1.0, 15).is_err());
    }

    #[test]
    fn interpolation_is_exact_for_cubics_in_log_r() {
        let g = RadialGrid::<f64>::log(3, 1e-2, 1e2, 64).unwrap();
        let f = |r: f64| {
            let t = r.ln();
            1.0 + t - 0.5 * t * t + 0.1 * t * t * t
        };
        let data: Vec<f64> = g.nodes().iter().map(|&r| f(r)).collect();
        for r in [0.0101, 0.37, 5.0, 99.0] {
            assert!((interpolate(&g, &data, r) - f(r)).abs() < 1e-10);
        }
    }
}
