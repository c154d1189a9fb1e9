//! Trace CSV and report files.
//!
//! A trace file starts with two comment lines, the format tag and the
//! metadata JSON, followed by a headed CSV table:
//!
//! ```text
//! # saddle-trace/v1
//! # {"config": {...}, "seed": 1, ...}
//! t,eta,phi_at_avg,saddle_gap,...
//! ```

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::HarnessError;
use crate::analysis::BoundConstants;
use crate::dynamics::{Schedule, StepRecord};

pub const TRACE_FORMAT: &str = "saddle-trace/v1";

pub const TRACE_COLUMNS: [&str; 14] = [
    "t",
    "eta",
    "phi_at_avg",
    "saddle_gap",
    "disagreement_D",
    "disagreement_z",
    "cost_err",
    "constraint_violation",
    "cum_disagreement_D",
    "cum_disagreement_z",
    "input_max_D",
    "input_max_z",
    "input_sum_D",
    "input_sum_z",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub config: ExperimentConfig,
    pub seed: Option<u64>,
    pub sigma: f64,
    pub schedule: Schedule,
    pub horizon: usize,
    pub stride: usize,
    pub radius: f64,
    /// `‖w_1‖, ‖D_1‖, ‖μ_1‖, ‖z_1‖`.
    pub initial_norms: [f64; 4],
    pub constants: BoundConstants,
    pub oracle_value: Option<f64>,
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| HarnessError::Io(e.error))?;
    Ok(())
}

pub fn write_json_atomic<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Serializes a trace. Floats use the shortest round-trip representation,
/// so equal runs give identical bytes.
pub fn trace_csv(meta: &TraceMeta, records: &[StepRecord]) -> Result<Vec<u8>, HarnessError> {
    let mut out = Vec::new();
    writeln!(out, "# {TRACE_FORMAT}")?;
    writeln!(out, "# {}", serde_json::to_string(meta)?)?;
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(TRACE_COLUMNS)?;
        for r in records {
            w.write_record([
                r.t.to_string(),
                r.eta.to_string(),
                r.phi_at_avg.to_string(),
                opt(r.saddle_gap),
                r.disagreement_d.to_string(),
                r.disagreement_z.to_string(),
                opt(r.cost_err),
                opt(r.constraint_violation),
                r.cum_disagreement_d.to_string(),
                r.cum_disagreement_z.to_string(),
                r.input_max_d.to_string(),
                r.input_max_z.to_string(),
                r.input_sum_d.to_string(),
                r.input_sum_z.to_string(),
            ])?;
        }
        w.flush()?;
    }
    Ok(out)
}

pub fn write_trace(
    path: &Path,
    meta: &TraceMeta,
    records: &[StepRecord],
) -> Result<(), HarnessError> {
    write_atomic(path, &trace_csv(meta, records)?)
}

fn parse_field<T: std::str::FromStr>(s: &str, col: &str, line: usize) -> Result<T, HarnessError> {
    s.parse()
        .map_err(|_| HarnessError::Trace(format!("row {line}: bad value {s:?} in column {col}")))
}

fn parse_opt(s: &str, col: &str, line: usize) -> Result<Option<f64>, HarnessError> {
    if s.is_empty() {
        Ok(None)
    } else {
        parse_field(s, col, line).map(Some)
    }
}

pub fn read_trace(path: &Path) -> Result<(TraceMeta, Vec<StepRecord>), HarnessError> {
    let file = std::fs::File::open(path)
        .map_err(|e| HarnessError::Config(format!("cannot read trace {}: {e}", path.display())))?;
    let mut reader = std::io::BufReader::new(file);
    let mut line = String::new();
    reader.read_line(&mut line)?;
    if line.trim_end() != format!("# {TRACE_FORMAT}") {
        return Err(HarnessError::Trace(format!(
            "unsupported trace format line {:?}",
            line.trim_end()
        )));
    }
    line.clear();
    reader.read_line(&mut line)?;
    let json = line
        .trim_end()
        .strip_prefix("# ")
        .ok_or_else(|| HarnessError::Trace("missing metadata line".into()))?;
    let meta: TraceMeta =
        serde_json::from_str(json).map_err(|e| HarnessError::Trace(format!("metadata: {e}")))?;

    let mut rdr = csv::Reader::from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.iter().ne(TRACE_COLUMNS) {
        return Err(HarnessError::Trace(format!(
            "unexpected columns {header:?}"
        )));
    }
    let mut records = Vec::new();
    for (k, row) in rdr.records().enumerate() {
        let row = row?;
        let line = k + 1;
        let f = |i: usize| parse_field::<f64>(&row[i], TRACE_COLUMNS[i], line);
        let o = |i: usize| parse_opt(&row[i], TRACE_COLUMNS[i], line);
        records.push(StepRecord {
            t: parse_field(&row[0], "t", line)?,
            eta: f(1)?,
            phi_at_avg: f(2)?,
            saddle_gap: o(3)?,
            disagreement_d: f(4)?,
            disagreement_z: f(5)?,
            cost_err: o(6)?,
            constraint_violation: o(7)?,
            cum_disagreement_d: f(8)?,
            cum_disagreement_z: f(9)?,
            input_max_d: f(10)?,
            input_max_z: f(11)?,
            input_sum_d: f(12)?,
            input_sum_z: f(13)?,
        });
    }
    Ok((meta, records))
}
