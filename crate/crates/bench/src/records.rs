use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::BenchError;

pub(crate) const RECORD_HEADER: [&str; 8] =
    ["instance", "solver", "repetition", "seed", "valid", "imbalance", "wall_time_ms", "meets_threshold"];

/// One solver run. `imbalance` is absent for invalid results; `wall_time_ms`
/// is absent when the run could not be attempted (instance or solver error).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub instance: String,
    pub solver: String,
    pub repetition: usize,
    pub seed: u64,
    pub valid: bool,
    pub imbalance: Option<f64>,
    pub wall_time_ms: Option<f64>,
    pub meets_threshold: bool,
}

impl RunRecord {
    /// Equality ignoring the timing field.
    pub fn same_outcome(&self, other: &Self) -> bool {
        Self { wall_time_ms: None, ..self.clone() } == Self { wall_time_ms: None, ..other.clone() }
    }

    fn csv_fields(&self) -> [String; 8] {
        [
            self.instance.clone(),
            self.solver.clone(),
            self.repetition.to_string(),
            self.seed.to_string(),
            self.valid.to_string(),
            opt_float(self.imbalance),
            opt_float(self.wall_time_ms),
            self.meets_threshold.to_string(),
        ]
    }
}

/// Shortest round-tripping decimal form; empty when absent.
pub(crate) fn opt_float(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(format!("unknown format `{other}` (expected csv or json)")),
        }
    }
}

/// Streams records as CSV rows or as the elements of a JSON array.
pub struct RecordWriter<W: Write> {
    inner: Inner<W>,
}

enum Inner<W: Write> {
    Csv(csv::Writer<W>),
    Json { out: W, first: bool },
}

impl<W: Write> RecordWriter<W> {
    pub fn new(out: W, format: OutputFormat) -> Result<Self, BenchError> {
        let inner = match format {
            OutputFormat::Csv => {
                let mut w = csv::Writer::from_writer(out);
                w.write_record(RECORD_HEADER)?;
                w.flush()?;
                Inner::Csv(w)
            }
            OutputFormat::Json => {
                let mut out = out;
                out.write_all(b"[")?;
                Inner::Json { out, first: true }
            }
        };
        Ok(Self { inner })
    }

    /// Writes and flushes one record, so partial output is never mid-row.
    pub fn write(&mut self, record: &RunRecord) -> Result<(), BenchError> {
        match &mut self.inner {
            Inner::Csv(w) => {
                w.write_record(record.csv_fields())?;
                w.flush()?;
            }
            Inner::Json { out, first } => {
                out.write_all(if *first { b"\n  " } else { b",\n  " })?;
                serde_json::to_writer(&mut *out, record)?;
                out.flush()?;
                *first = false;
            }
        }
        Ok(())
    }

    pub fn finish(self) -> Result<W, BenchError> {
        match self.inner {
            Inner::Csv(w) => w.into_inner().map_err(|e| BenchError::Output(e.into_error())),
            Inner::Json { mut out, first } => {
                out.write_all(if first { b"]\n" } else { b"\n]\n" })?;
                out.flush()?;
                Ok(out)
            }
        }
    }
}

/// Reads records written by [`RecordWriter`]; the format is detected from
/// the first non-blank character.
pub fn read_records<R: Read>(mut input: R) -> Result<Vec<RunRecord>, BenchError> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    if text.trim_start().starts_with('[') {
        return Ok(serde_json::from_str(&text)?);
    }
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers()?.clone();
    if header.iter().ne(RECORD_HEADER) {
        return Err(BenchError::Record {
            line: 1,
            field: "header",
            message: format!("expected `{}`", RECORD_HEADER.join(",")),
        });
    }
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let field = |i: usize| row.get(i).unwrap_or("");
        let err = |field: &'static str, message: String| BenchError::Record { line, field, message };
        let parse_bool = |i: usize, name: &'static str| {
            field(i).parse::<bool>().map_err(|e| err(name, e.to_string()))
        };
        let parse_opt = |i: usize, name: &'static str| match field(i) {
            "" => Ok(None),
            s => s.parse::<f64>().map(Some).map_err(|e| err(name, e.to_string())),
        };
        out.push(RunRecord {
            instance: field(0).to_string(),
            solver: field(1).to_string(),
            repetition: field(2).parse().map_err(|e: std::num::ParseIntError| err("repetition", e.to_string()))?,
            seed: field(3).parse().map_err(|e: std::num::ParseIntError| err("seed", e.to_string()))?,
            valid: parse_bool(4, "valid")?,
            imbalance: parse_opt(5, "imbalance")?,
            wall_time_ms: parse_opt(6, "wall_time_ms")?,
            meets_threshold: parse_bool(7, "meets_threshold")?,
        });
    }
    Ok(out)
}
