use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::grid::{interpolate, RadialGrid};
use crate::error::{Error, Result};
use crate::real::Real;

/// Power-law extension beyond `r_max`:
/// `f(s) = f(r_max) (s / r_max)^{-exponent} (ln s / ln r_max)^{log_power}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", bound = "T: Real")]
pub struct TailModel<T> {
    pub exponent: T,
    pub log_power: T,
}

impl<T: Real> TailModel<T> {
    pub fn power(exponent: T) -> Self {
        Self {
            exponent,
            log_power: T::zero(),
        }
    }

    pub fn with_log(exponent: T, log_power: T) -> Self {
        Self { exponent, log_power }
    }

    /// Tail of `f^power`.
    pub fn pow(&self, power: T) -> Self {
        Self {
            exponent: self.exponent * power,
            log_power: self.log_power * power,
        }
    }
}

/// Radial profile sampled on a [`RadialGrid`]. Below `r_min` the profile is
/// extended by the constant `values[0]`; above `r_max` by the optional tail
/// model (absent means zero).
#[derive(Debug, Clone, PartialEq)]
pub struct RadialField<T> {
    grid: Arc<RadialGrid<T>>,
    values: Vec<T>,
    tail: Option<TailModel<T>>,
}

impl<T: Real> RadialField<T> {
    pub fn new(grid: Arc<RadialGrid<T>>, values: Vec<T>, tail: Option<TailModel<T>>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Validation(format!(
                "field has {} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !(**v >= T::zero()) || !v.is_finite()) {
            return Err(Error::Validation(format!("field value {bad} is not a nonnegative finite number")));
        }
        if let Some(t) = tail {
            if !(t.exponent > T::zero()) {
                return Err(Error::Validation(format!("tail exponent {} must be positive", t.exponent)));
            }
            if t.log_power != T::zero() && !(grid.r_max() > T::one()) {
                return Err(Error::Validation("log-corrected tails need rMax > 1".into()));
            }
        }
        Ok(Self { grid, values, tail })
    }

    /// Samples `f` at the grid nodes.
    pub fn from_fn(grid: Arc<RadialGrid<T>>, tail: Option<TailModel<T>>, f: impl Fn(T) -> T) -> Result<Self> {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        Self::new(grid, values, tail)
    }

    pub fn zeros(grid: Arc<RadialGrid<T>>) -> Self {
        let values = vec![T::zero(); grid.len()];
        Self {
            grid,
            values,
            tail: None,
        }
    }

    pub fn grid(&self) -> &Arc<RadialGrid<T>> {
        &self.grid
    }
    pub fn values(&self) -> &[T] {
        &self.values
    }
    pub fn into_values(self) -> Vec<T> {
        self.values
    }
    pub fn tail(&self) -> Option<TailModel<T>> {
        self.tail
    }
    pub fn set_tail(&mut self, tail: Option<TailModel<T>>) {
        self.tail = tail;
    }
    pub fn with_tail(mut self, tail: Option<TailModel<T>>) -> Self {
        self.tail = tail;
        self
    }

    pub fn sup(&self) -> T {
        self.values.iter().fold(T::zero(), |m, &v| m.max(v))
    }

    /// Pointwise power `f^power`, with the tail model transformed accordingly.
    pub fn powf(&self, power: T) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| v.powf(power)).collect(),
            tail: self.tail.map(|t| t.pow(power)),
        }
    }

    /// Value of the extension beyond `r_max`.
    pub fn tail_value(&self, r: T) -> T {
        let last = *self.values.last().unwrap();
        match self.tail {
            None => T::zero(),
            Some(t) => {
                let r_max = self.grid.r_max();
                let mut v = last * (r / r_max).powf(-t.exponent);
                if t.log_power != T::zero() {
                    v = v * (r.ln() / r_max.ln()).powf(t.log_power);
                }
                v
            }
        }
    }

    /// Evaluates the extended profile at any radius. Interior values use cubic
    /// interpolation of `ln f` in `ln r` (plain values where `f` vanishes).
    pub fn eval(&self, r: T) -> T {
        let g = &*self.grid;
        if r <= g.r_min() {
            return self.values[0];
        }
        if r > g.r_max() {
            return self.tail_value(r);
        }
        if self.values.iter().all(|&v| v > T::zero()) {
            let logs: Vec<T> = self.values.iter().map(|v| v.ln()).collect();
            interpolate(g, &logs, r).exp()
        } else {
            interpolate(g, &self.values, r)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Arc<RadialGrid<f64>> {
        Arc::new(RadialGrid::log(3, 1e-2, 1e2, 64).unwrap())
    }

    #[test]
    fn rejects_negative_values() {
        let g = grid();
        let mut vals = vec![1.0; 64];
        vals[3] = -1.0;
        assert!(RadialField::new(g, vals, None).is_err());
    }

    #[test]
    fn power_law_eval_is_exact_everywhere() {
        let f = RadialField::from_fn(grid(), Some(TailModel::power(1.5)), |r| r.powf(-1.5)).unwrap();
        for r in [0.013, 0.5, 7.0, 99.0, 500.0, 1e6] {
            assert!(((f.eval(r) - r.powf(-1.5)) / r.powf(-1.5)).abs() < 1e-10, "r = {r}");
        }
        assert_eq!(f.eval(1e-5), f.values()[0]);
    }

    #[test]
    fn log_tail_extension() {
        let g = Arc::new(RadialGrid::<f64>::log(3, 2.0, 1e2, 64).unwrap());
        let f = RadialField::from_fn(g, Some(TailModel::with_log(2.0, 1.0)), |r: f64| r.powi(-2) * r.ln()).unwrap();
        let r = 1e4f64;
        assert!(((f.eval(r) - r.powi(-2) * r.ln()) / f.eval(r)).abs() < 1e-12);
    }

    #[test]
    fn powf_transforms_tail() {
        let f = RadialField::from_fn(grid(), Some(TailModel::with_log(2.0, 1.0)), |r| 1.0 / (1.0 + r * r)).unwrap();
        let g = f.powf(3.0);
        assert_eq!(g.tail().unwrap(), TailModel::with_log(6.0, 3.0));
    }
}
