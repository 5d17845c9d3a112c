//! Flat CSV records written by the sweeps.
//!
//! Every file starts with a header line even when it has no rows. Columns
//! `n`, `scheme` and `seed` identify the cell; full-history rows use `n = -1`.
//! Floats are written in shortest round-trip form so reruns are byte-identical.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;

pub trait CsvRecord: Serialize {
    const HEADER: &'static [&'static str];
}

/// One metric of one cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultRow {
    pub experiment_id: String,
    pub scheme: String,
    pub n: i64,
    pub seed: u64,
    pub init_state: String,
    pub metric: String,
    pub value: f64,
    pub physical_unitary_count: u64,
}

impl CsvRecord for ResultRow {
    const HEADER: &'static [&'static str] = &[
        "experiment_id",
        "scheme",
        "n",
        "seed",
        "init_state",
        "metric",
        "value",
        "physical_unitary_count",
    ];
}

/// Summed capacity of one polynomial order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IpcOrderRow {
    pub k: usize,
    pub ipc_k: f64,
    pub total: f64,
    pub n: i64,
    pub scheme: String,
    pub seed: u64,
}

impl CsvRecord for IpcOrderRow {
    const HEADER: &'static [&'static str] = &["k", "ipc_k", "total", "n", "scheme", "seed"];
}

/// Linear memory capacity at one delay.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurveRow {
    pub delay: usize,
    pub c1: f64,
    pub n: i64,
    pub scheme: String,
    pub seed: u64,
    pub init_state: String,
}

impl CsvRecord for CurveRow {
    const HEADER: &'static [&'static str] = &["delay", "c1", "n", "scheme", "seed", "init_state"];
}

/// A target whose capacity survived the threshold.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TargetRow {
    pub k: usize,
    /// Degrees joined by `+`, e.g. `1+2`.
    pub tuple: String,
    /// Delays joined by `:`, aligned with `tuple`.
    pub delays: String,
    pub capacity: f64,
    pub n: i64,
    pub scheme: String,
    pub seed: u64,
}

impl CsvRecord for TargetRow {
    const HEADER: &'static [&'static str] =
        &["k", "tuple", "delays", "capacity", "n", "scheme", "seed"];
}

/// Memory-curve comparison of one reset-window cell against the full-history
/// baseline of the same seed. `ratio` is empty when the baseline sum is zero.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InitMetricRow {
    pub init_state: String,
    pub n: i64,
    pub seed: u64,
    pub ratio: Option<f64>,
    pub difference: f64,
    pub windowed_difference: f64,
}

impl CsvRecord for InitMetricRow {
    const HEADER: &'static [&'static str] = &[
        "init_state",
        "n",
        "seed",
        "ratio",
        "difference",
        "windowed_difference",
    ];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    /// The cell produced no results.
    Error,
    /// The cell finished but a sanity bound was violated.
    Warning,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FailureRow {
    pub experiment_id: String,
    pub scheme: String,
    pub n: i64,
    pub seed: u64,
    pub init_state: String,
    pub severity: Severity,
    pub message: String,
}

impl CsvRecord for FailureRow {
    const HEADER: &'static [&'static str] = &[
        "experiment_id",
        "scheme",
        "n",
        "seed",
        "init_state",
        "severity",
        "message",
    ];
}

pub fn write_records<T: CsvRecord, W: Write>(rows: &[T], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(T::HEADER)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_records_to<T: CsvRecord>(rows: &[T], path: &Path) -> Result<()> {
    write_records(rows, File::create(path)?)
}
