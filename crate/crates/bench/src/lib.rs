//! Benchmark harness for the balancing solvers: runs a solver portfolio over
//! an instance corpus with repetitions and summarizes the per-run records.

mod harness;
mod records;
mod summary;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use tbp_core::datasets::DatasetError;
use tbp_core::decompose::{decompose_solve, DecomposeError};
use tbp_core::solvers::SolveError;
use tbp_core::{BladeSet, DecompositionConfig, DiskImbalance, SolveReport, SolverConfig};
use thiserror::Error;

pub use harness::{run_benchmark, run_seed, BenchPlan};
pub use records::{read_records, OutputFormat, RecordWriter, RunRecord};
pub use summary::{pooled_imbalance, summarize, write_summary, PooledStats, SummaryRow};

/// Industrial acceptance limit on the total imbalance.
pub const IMBALANCE_THRESHOLD: f64 = 3.0;

pub const DEFAULT_REPETITIONS: usize = 10;

/// Names accepted by [`BenchSolver::from_str`].
pub const SOLVER_NAMES: [&str; 6] = ["heuristic", "imbalance-sa", "qubo-sa", "tabu", "brute-force", "decompose"];

/// Environment variable naming the default corpus directory.
pub const CORPUS_DIR_ENV: &str = "TBP_CORPUS_DIR";

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("unknown solver `{0}` (expected one of: {list})", list = SOLVER_NAMES.join(", "))]
    UnknownSolver(String),
    #[error("no solvers given")]
    NoSolvers,
    #[error("no records to summarize")]
    EmptyRecords,
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Decompose(#[from] DecomposeError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("record {line}: field `{field}`: {message}")]
    Record { line: u64, field: &'static str, message: String },
    #[error("output: {0}")]
    Output(#[from] std::io::Error),
}

/// Anything the harness can run: a single solver or the decomposition pipeline.
#[derive(Debug, Clone, PartialEq)]
pub enum BenchSolver {
    Single(SolverConfig),
    Decompose(DecompositionConfig),
}

impl BenchSolver {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Single(s) => s.name(),
            Self::Decompose(_) => "decompose",
        }
    }

    pub fn solve(&self, blades: &BladeSet, disk: &DiskImbalance, seed: u64) -> Result<SolveReport, BenchError> {
        match self {
            Self::Single(s) => Ok(s.solve(blades, disk, seed)?),
            Self::Decompose(cfg) => Ok(decompose_solve(blades, disk, cfg, seed)?.0),
        }
    }
}

impl FromStr for BenchSolver {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "decompose" {
            return Ok(Self::Decompose(DecompositionConfig::default()));
        }
        s.parse::<SolverConfig>()
            .map(Self::Single)
            .map_err(|_| BenchError::UnknownSolver(s.to_string()))
    }
}

impl fmt::Display for BenchSolver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parses every name before anything runs, so a typo fails fast.
pub fn parse_solvers<S: AsRef<str>>(names: &[S]) -> Result<Vec<BenchSolver>, BenchError> {
    if names.is_empty() {
        return Err(BenchError::NoSolvers);
    }
    names.iter().map(|n| n.as_ref().trim().parse()).collect()
}
