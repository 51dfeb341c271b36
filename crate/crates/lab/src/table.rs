//! Result rows and their CSV/JSON emission.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{LabError, Result};

/// Build identifier stamped on every row.
pub fn build_id() -> &'static str {
    option_env!("NBRW_BUILD_ID").unwrap_or(concat!("nbrw-lab-", env!("CARGO_PKG_VERSION")))
}

/// One emitted row. The first ten columns are the fixed schema; the rest
/// carry the grid point, the quantity and provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub mode: String,
    pub n: usize,
    pub alpha: f64,
    pub r: Option<usize>,
    pub t: u64,
    pub estimate: Option<f64>,
    pub ci_lo: Option<f64>,
    pub ci_hi: Option<f64>,
    pub theory: Option<f64>,
    pub residual: Option<f64>,
    pub c: Option<f64>,
    pub quantity: String,
    pub time_map: Option<String>,
    /// Secondary theory value, e.g. the exact conditional tail.
    pub theory_alt: Option<f64>,
    pub seed: u64,
    pub replicas: u64,
    pub build: String,
}

impl ResultRow {
    pub fn new(quantity: &str, mode: &str, n: usize, alpha: f64, r: Option<usize>, t: u64) -> Self {
        Self {
            mode: mode.to_string(),
            n,
            alpha,
            r,
            t,
            estimate: None,
            ci_lo: None,
            ci_hi: None,
            theory: None,
            residual: None,
            c: None,
            quantity: quantity.to_string(),
            time_map: None,
            theory_alt: None,
            seed: 0,
            replicas: 0,
            build: build_id().to_string(),
        }
    }

    pub fn estimate(mut self, v: f64) -> Self {
        self.estimate = Some(v);
        self
    }

    pub fn ci(mut self, (lo, hi): (f64, f64)) -> Self {
        self.ci_lo = Some(lo);
        self.ci_hi = Some(hi);
        self
    }

    /// Sets the theory value and, when an estimate is present, the residual.
    pub fn theory(mut self, v: Option<f64>) -> Self {
        self.theory = v;
        self.residual = match (self.estimate, v) {
            (Some(e), Some(t)) => Some(e - t),
            _ => None,
        };
        self
    }

    pub fn provenance(mut self, seed: u64, replicas: u64) -> Self {
        self.seed = seed;
        self.replicas = replicas;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub command: String,
    pub seed: u64,
    pub replicas: u64,
    pub build: String,
    pub wall_time_s: f64,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub metadata: Metadata,
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row)
                .map_err(|e| LabError::Output(e.to_string()))?;
        }
        if self.rows.is_empty() {
            w.write_record(CSV_HEADER)
                .map_err(|e| LabError::Output(e.to_string()))?;
        }
        w.into_inner().map_err(|e| LabError::Output(e.to_string()))
    }

    pub fn to_json(&self) -> Result<Vec<u8>> {
        serde_json::to_vec_pretty(self).map_err(|e| LabError::Output(e.to_string()))
    }

    pub fn rows_of<'a>(&'a self, quantity: &'a str) -> impl Iterator<Item = &'a ResultRow> + 'a {
        self.rows.iter().filter(move |r| r.quantity == quantity)
    }
}

pub const CSV_HEADER: [&str; 17] = [
    "mode",
    "n",
    "alpha",
    "r",
    "t",
    "estimate",
    "ci_lo",
    "ci_hi",
    "theory",
    "residual",
    "c",
    "quantity",
    "time_map",
    "theory_alt",
    "seed",
    "replicas",
    "build",
];

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<PathBuf> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
    }
    let mut f = std::fs::File::create(path).map_err(|e| LabError::io(path, e))?;
    f.write_all(bytes).map_err(|e| LabError::io(path, e))?;
    Ok(path.to_path_buf())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::CommandKind;

    #[test]
    fn csv_header_is_fixed() {
        let table = ResultTable {
            metadata: Metadata {
                command: "tau-tail".into(),
                seed: 1,
                replicas: 1,
                build: build_id().into(),
                wall_time_s: 0.0,
                config: ExperimentConfig::new(CommandKind::TauTail),
            },
            rows: vec![ResultRow::new("tau_tail", "local", 10, 0.5, None, 3)
                .estimate(0.25)
                .theory(Some(0.125))],
        };
        let csv = String::from_utf8(table.to_csv().unwrap()).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
        assert!(lines
            .next()
            .unwrap()
            .starts_with("local,10,0.5,,3,0.25,,,0.125,0.125,"));
        let empty = ResultTable {
            rows: Vec::new(),
            ..table
        };
        assert_eq!(
            String::from_utf8(empty.to_csv().unwrap()).unwrap().trim(),
            CSV_HEADER.join(",")
        );
    }
}
