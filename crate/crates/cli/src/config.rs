//! Run configuration: a JSON file merged with command-line flags (flags win).

use std::path::Path;

use hls_core::exponents::Params;
use hls_core::riesz::{GridSpec, Normalization};
use hls_core::solver::InitRates;
use hls_core::{Error, Result};
use serde::{Deserialize, Serialize};

/// Every setting any command reads. Unset fields fall back to defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct RunConfig {
    pub n: Option<u32>,
    pub alpha: Option<f64>,
    pub k: Option<u32>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    /// `"rMin:rMax:count"`.
    pub grid: Option<String>,
    pub normalization: Option<Normalization>,
    pub max_iters: Option<usize>,
    pub damping: Option<f64>,
    pub tol: Option<f64>,
    pub residual_tol: Option<f64>,
    pub init: Option<InitRates>,
    pub u0: Option<f64>,
    pub xi: Option<f64>,
    pub r_start: Option<f64>,
    pub r_end: Option<f64>,
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub samples_per_decade: Option<usize>,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub iters: Option<usize>,
}

macro_rules! overlay {
    ($dst:ident, $src:ident: $($field:ident),*) => {
        $( if $src.$field.is_some() { $dst.$field = $src.$field.clone(); } )*
    };
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Validation(format!("config {}: {e}", path.display())))
    }

    /// Loads `file` (if any) and lays `flags` over it.
    pub fn merged(file: Option<&Path>, flags: &RunConfig) -> Result<Self> {
        let mut cfg = match file {
            Some(path) => Self::from_file(path)?,
            None => Self::default(),
        };
        overlay!(cfg, flags: n, alpha, k, p, q, grid, normalization, max_iters, damping, tol, residual_tol, init, u0, xi, r_start, r_end,
            rtol, atol, samples_per_decade, lo, hi, iters);
        Ok(cfg)
    }

    /// Parameters in the caller's orientation, validated. `k` is the
    /// polyharmonic order and resolves to `alpha = 2k`.
    pub fn params(&self) -> Result<Params<f64>> {
        let n = self.n.ok_or_else(|| missing("n"))?;
        let p = self.p.ok_or_else(|| missing("p"))?;
        let q = self.q.ok_or_else(|| missing("q"))?;
        let alpha = match (self.alpha, self.k) {
            (Some(a), None) => a,
            (None, Some(k)) => return Params::from_order(n, k, p, q),
            (Some(a), Some(k)) if a == 2.0 * k as f64 => a,
            (Some(a), Some(k)) => {
                return Err(Error::Validation(format!("alpha = {a} conflicts with k = {k} (alpha = 2k)")));
            }
            (None, None) => return Err(missing("alpha or k")),
        };
        Params::new(n, alpha, p, q)
    }

    pub fn grid_spec(&self) -> Result<GridSpec<f64>> {
        match &self.grid {
            None => Ok(GridSpec::default()),
            Some(s) => parse_grid(s),
        }
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization.unwrap_or_default()
    }
}

fn missing(what: &str) -> Error {
    Error::Validation(format!("missing required parameter {what}"))
}

/// Parses `rMin:rMax:count`.
pub fn parse_grid(s: &str) -> Result<GridSpec<f64>> {
    let bad = || Error::Validation(format!("grid '{s}' is not of the form rMin:rMax:count"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let r_min: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let r_max: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
    // Let the grid constructor apply the range checks.
    hls_core::riesz::RadialGrid::<f64>::log(3, r_min, r_max, count)?;
    Ok(GridSpec { r_min, r_max, count })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_strings() {
        let g = parse_grid("1e-3:1e3:128").unwrap();
        assert_eq!((g.r_min, g.r_max, g.count), (1e-3, 1e3, 128));
        for bad in ["1:2", "a:1:10", "1:0.5:64", "1e-3:1e3:4", "0:1:64"] {
            assert!(parse_grid(bad).unwrap_err().is_validation(), "{bad}");
        }
    }

    #[test]
    fn flags_override_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(&path, r#"{"n": 4, "alpha": 2, "p": 3, "q": 3, "maxIters": 10}"#).unwrap();
        let flags = RunConfig {
            q: Some(5.0),
            ..RunConfig::default()
        };
        let cfg = RunConfig::merged(Some(&path), &flags).unwrap();
        assert_eq!((cfg.n, cfg.p, cfg.q, cfg.max_iters), (Some(4), Some(3.0), Some(5.0), Some(10)));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(&path, r#"{"n": 4, "beta": 1}"#).unwrap();
        assert!(RunConfig::merged(Some(&path), &RunConfig::default()).unwrap_err().is_validation());
    }

    #[test]
    fn order_resolves_alpha() {
        let cfg = RunConfig {
            n: Some(3),
            k: Some(1),
            p: Some(3.0),
            q: Some(3.0),
            ..RunConfig::default()
        };
        assert_eq!(cfg.params().unwrap().alpha, 2.0);
        let clash = RunConfig { alpha: Some(1.0), ..cfg };
        assert!(clash.params().unwrap_err().is_validation());
    }
}
