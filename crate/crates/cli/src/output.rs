use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::experiments::{RunOutput, Table};
use crate::CliError;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "NPTCORR_OUT_DIR";

/// One line of a result table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultRow {
    pub t: f64,
    pub t_prime: f64,
    pub estimate_re: f64,
    pub estimate_im: f64,
    pub stderr_re: f64,
    pub stderr_im: f64,
    pub analytic_re: f64,
    pub analytic_im: f64,
    pub shots: usize,
    pub method: String,
}

/// Hex SHA-256 of the canonical TOML echo.
pub fn config_hash(echo: &str) -> String {
    let digest = Sha256::digest(echo.as_bytes());
    let mut hex = String::with_capacity(64);
    for b in digest.iter() {
        hex.push_str(&format!("{b:02x}"));
    }
    hex
}

/// `--out`, then `output.dir`, then the environment, then `results`.
pub fn resolve_out_dir(cli: Option<&Path>, config: &ExperimentConfig) -> PathBuf {
    if let Some(p) = cli {
        return p.to_path_buf();
    }
    if let Some(d) = &config.output.dir {
        return PathBuf::from(d);
    }
    match std::env::var(OUT_DIR_ENV) {
        Ok(d) if !d.is_empty() => PathBuf::from(d),
        _ => PathBuf::from("results"),
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn csv_bytes<R: Serialize>(rows: &[R]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Io(e.to_string()))?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

/// Writes the CSV and JSON sidecar into `dir`; returns both paths.
pub fn write_outputs(dir: &Path, config: &ExperimentConfig, out: &RunOutput) -> Result<(PathBuf, PathBuf), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let name = config.base_name();
    let csv_path = dir.join(format!("{name}.csv"));
    let json_path = dir.join(format!("{name}.json"));

    let body = match &out.table {
        Table::Results(rows) => csv_bytes(rows)?,
        Table::Keldysh(rows) => csv_bytes(rows)?,
    };
    fs::write(&csv_path, body).map_err(|e| io_err(&csv_path, e))?;

    let echo = config.to_toml()?;
    let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let header = json!({
        "software": { "name": "nptcorr", "version": env!("CARGO_PKG_VERSION") },
        "experiment": config.experiment.as_str(),
        "config_toml": echo,
        "config": serde_json::to_value(config).map_err(|e| CliError::Io(e.to_string()))?,
        "config_hash": config_hash(&echo),
        "conventions": conventions(out),
        "columns": out.table.columns(),
        "rows": out.table.len(),
        "summary": out.summary,
        "timestamp_unix": timestamp,
    });
    let text = serde_json::to_string_pretty(&header).map_err(|e| CliError::Io(e.to_string()))?;
    fs::write(&json_path, text + "\n").map_err(|e| io_err(&json_path, e))?;
    Ok((csv_path, json_path))
}

fn conventions(out: &RunOutput) -> Value {
    json!({
        "phase_gate": "S",
        "alpha": { "0": "anticommutator", "1": "commutator" },
        "qubit_order": "first qubit most significant, ancilla last",
        "occupied_state": "|1>",
        "coefficient_resolution": out.resolution.map(|r| serde_json::to_value(r).unwrap_or(Value::Null)),
    })
}
