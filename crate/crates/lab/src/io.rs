//! Plain-text formats for degree sequences, configurations, trajectories and
//! curves.

use std::io::{BufRead, Write};

use nbrw_core::dynamics::TrajectoryRecord;
use nbrw_core::Configuration;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Newline-delimited degrees; blank lines and `#` comments are skipped.
pub fn read_degrees(reader: impl BufRead) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| LabError::Output(e.to_string()))?;
        let s = line.split('#').next().unwrap_or("").trim();
        if s.is_empty() {
            continue;
        }
        out.push(
            s.parse()
                .map_err(|_| LabError::config(format!("line {}: {s:?} is not a degree", i + 1)))?,
        );
    }
    Ok(out)
}

pub fn write_degrees(mut w: impl Write, degrees: &[usize]) -> std::io::Result<()> {
    for d in degrees {
        writeln!(w, "{d}")?;
    }
    Ok(())
}

/// `|H|` space-separated partner indices on one line.
pub fn format_configuration(cfg: &Configuration) -> String {
    let parts: Vec<String> = cfg.pairing().map(|h| h.to_string()).collect();
    parts.join(" ")
}

pub fn parse_configuration(line: &str) -> Result<Configuration> {
    let pairing = line
        .split_whitespace()
        .map(|t| {
            t.parse::<usize>()
                .map_err(|_| LabError::config(format!("{t:?} is not a half-edge index")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Configuration::from_pairing(pairing)?)
}

/// One line of a trajectory dump.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrajectoryLine {
    pub replica: u64,
    pub t: u64,
    pub x: usize,
    #[serde(rename = "I_t")]
    pub i_t: bool,
    pub tau: Option<u64>,
}

/// Writes `{replica, t, x, I_t, tau}` per recorded step.
pub fn write_trajectory_jsonl(
    mut w: impl Write,
    replica: u64,
    rec: &TrajectoryRecord,
) -> std::io::Result<()> {
    for (t, &x) in rec.positions.iter().enumerate() {
        let line = TrajectoryLine {
            replica,
            t: t as u64,
            x,
            i_t: t > 0 && rec.indicators[t - 1],
            tau: rec.tau,
        };
        serde_json::to_writer(&mut w, &line)?;
        writeln!(w)?;
    }
    Ok(())
}

/// `header_x,header_y` then one row per point.
pub fn write_curve_csv(
    w: impl Write,
    headers: (&str, &str),
    points: impl IntoIterator<Item = (f64, f64)>,
) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    let out = |e: csv::Error| LabError::Output(e.to_string());
    csv.write_record([headers.0, headers.1]).map_err(out)?;
    for (x, y) in points {
        csv.write_record([x.to_string(), y.to_string()])
            .map_err(out)?;
    }
    csv.flush().map_err(|e| LabError::Output(e.to_string()))?;
    Ok(())
}
