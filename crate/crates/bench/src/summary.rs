use std::io::Write;

use serde::Serialize;

use crate::records::opt_float;
use crate::{BenchError, OutputFormat, RunRecord};

const SUMMARY_HEADER: [&str; 9] = [
    "instance",
    "solver",
    "runs",
    "valid_count",
    "mean_imbalance",
    "std_imbalance",
    "min_imbalance",
    "max_imbalance",
    "mean_wall_time_ms",
];

/// Statistics of one (instance, solver) cell. Imbalance statistics cover
/// valid runs only and are absent when there are none.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub instance: String,
    pub solver: String,
    pub runs: usize,
    pub valid_count: usize,
    pub mean_imbalance: Option<f64>,
    pub std_imbalance: Option<f64>,
    pub min_imbalance: Option<f64>,
    pub max_imbalance: Option<f64>,
    pub mean_wall_time_ms: Option<f64>,
}

impl SummaryRow {
    fn csv_fields(&self) -> [String; 9] {
        [
            self.instance.clone(),
            self.solver.clone(),
            self.runs.to_string(),
            self.valid_count.to_string(),
            opt_float(self.mean_imbalance),
            opt_float(self.std_imbalance),
            opt_float(self.min_imbalance),
            opt_float(self.max_imbalance),
            opt_float(self.mean_wall_time_ms),
        ]
    }
}

/// Mean and sample standard deviation (zero for a single value).
fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return Some((mean, 0.0));
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Some((mean, var.sqrt()))
}

/// One row per (instance, solver) in order of first appearance.
pub fn summarize(records: &[RunRecord]) -> Result<Vec<SummaryRow>, BenchError> {
    if records.is_empty() {
        return Err(BenchError::EmptyRecords);
    }
    let mut cells: Vec<(&str, &str, Vec<&RunRecord>)> = Vec::new();
    for r in records {
        match cells.iter_mut().find(|(i, s, _)| *i == r.instance && *s == r.solver) {
            Some(cell) => cell.2.push(r),
            None => cells.push((&r.instance, &r.solver, vec![r])),
        }
    }
    Ok(cells
        .into_iter()
        .map(|(instance, solver, runs)| {
            let d: Vec<f64> = runs.iter().filter(|r| r.valid).filter_map(|r| r.imbalance).collect();
            let times: Vec<f64> = runs.iter().filter_map(|r| r.wall_time_ms).collect();
            let stats = mean_std(&d);
            SummaryRow {
                instance: instance.to_string(),
                solver: solver.to_string(),
                runs: runs.len(),
                valid_count: d.len(),
                mean_imbalance: stats.map(|s| s.0),
                std_imbalance: stats.map(|s| s.1),
                min_imbalance: d.iter().copied().reduce(f64::min),
                max_imbalance: d.iter().copied().reduce(f64::max),
                mean_wall_time_ms: mean_std(&times).map(|s| s.0),
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PooledStats {
    pub runs: usize,
    pub valid: usize,
    pub mean: f64,
    pub std: f64,
    pub max: f64,
}

/// Imbalance statistics of one solver pooled over every instance.
pub fn pooled_imbalance(records: &[RunRecord], solver: &str) -> Option<PooledStats> {
    let runs: Vec<&RunRecord> = records.iter().filter(|r| r.solver == solver).collect();
    let d: Vec<f64> = runs.iter().filter(|r| r.valid).filter_map(|r| r.imbalance).collect();
    let (mean, std) = mean_std(&d)?;
    Some(PooledStats { runs: runs.len(), valid: d.len(), mean, std, max: d.iter().copied().fold(f64::MIN, f64::max) })
}

pub fn write_summary<W: Write>(out: W, rows: &[SummaryRow], format: OutputFormat) -> Result<(), BenchError> {
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(SUMMARY_HEADER)?;
            for row in rows {
                w.write_record(row.csv_fields())?;
            }
            w.flush()?;
        }
        OutputFormat::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, rows)?;
            out.write_all(b"\n")?;
            out.flush()?;
        }
    }
    Ok(())
}
