//! CSV curves, JSON reports and run manifests.

use std::path::{Path, PathBuf};

use hls_core::exponents::Params;
use hls_core::riesz::GridSpec;
use hls_core::{Error, Result};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

/// 17 significant digits.
pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(row.iter().map(|&x| fmt(x))).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// CSV with preformatted cells.
pub fn write_records(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(&row).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// Columns and rows of a CSV written by [`write_csv`].
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_path(path).map_err(io)?;
    let header: Vec<String> = r.headers().map_err(io)?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(io)?;
        let row = rec
            .iter()
            .map(|s| s.trim().parse::<f64>().map_err(|_| Error::Validation(format!("{}: bad number '{s}'", path.display()))))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

fn io(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// `(n, alpha, p, q)` in the caller's orientation.
pub fn params_json(params: &Params<f64>) -> Value {
    let (p, q) = params.original_pq();
    json!({ "n": params.n, "alpha": params.alpha, "p": p, "q": q })
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RunManifest {
    pub command: String,
    pub params: Value,
    pub grid_spec: GridSpec<f64>,
    pub config: Value,
    pub config_hash: String,
    pub outputs: Vec<String>,
    pub timestamp: String,
}

/// SHA-256 of the canonical JSON (sorted keys) of everything but the outputs
/// and the timestamp.
pub fn config_hash(command: &str, params: &Value, grid: &GridSpec<f64>, config: &Value) -> String {
    let canonical = json!({ "command": command, "params": params, "gridSpec": grid, "config": config });
    hex::encode(Sha256::digest(canonical.to_string().as_bytes()))
}

impl RunManifest {
    pub fn new(command: &str, params: &Params<f64>, grid_spec: GridSpec<f64>, config: Value, outputs: Vec<String>) -> Self {
        let params = params_json(params);
        let config_hash = config_hash(command, &params, &grid_spec, &config);
        Self {
            command: command.to_string(),
            params,
            grid_spec,
            config,
            config_hash,
            outputs,
            timestamp: chrono::Utc::now().to_rfc3339(),
        }
    }
}

pub const MANIFEST: &str = "manifest.json";
pub const REPORT: &str = "report.json";

/// Creates the output directory and returns the path of `name` inside it.
pub fn out_file(dir: &Path, name: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    Ok(dir.join(name))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(fmt(std::f64::consts::SQRT_2), "1.4142135623730951e0");
        assert_eq!(fmt(0.1).parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn hash_ignores_timestamp_and_key_order() {
        let params = Params::new(5, 2.0, 3.0, 3.0).unwrap();
        let a = RunManifest::new("solve", &params, GridSpec::default(), json!({"x": 1, "y": 2}), vec![]);
        let b = RunManifest::new("solve", &params, GridSpec::default(), json!({"y": 2, "x": 1}), vec!["a.csv".into()]);
        assert_eq!(a.config_hash, b.config_hash);
        let c = RunManifest::new("solve", &params, GridSpec::default(), json!({"x": 1, "y": 3}), vec![]);
        assert_ne!(a.config_hash, c.config_hash);
        assert_eq!(a.config_hash.len(), 64);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        write_csv(&path, &["r", "u"], vec![vec![1.0, 1.0 / 3.0], vec![2.0, 1e-300]]).unwrap();
        let (header, rows) = read_csv(&path).unwrap();
        assert_eq!(header, ["r", "u"]);
        assert_eq!(rows, vec![vec![1.0, 1.0 / 3.0], vec![2.0, 1e-300]]);
    }
}
