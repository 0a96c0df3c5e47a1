use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::Instant;

use tbp_core::datasets::{load, Manifest};
use tbp_core::seeds::{hash_str, mix};
use tbp_core::{BladeSet, DiskImbalance};

use crate::{BenchError, BenchSolver, RunRecord, DEFAULT_REPETITIONS, IMBALANCE_THRESHOLD};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchPlan {
    pub repetitions: usize,
    pub base_seed: u64,
    /// Worker threads; records are still emitted in schedule order.
    pub jobs: usize,
}

impl Default for BenchPlan {
    fn default() -> Self {
        Self { repetitions: DEFAULT_REPETITIONS, base_seed: 0, jobs: 1 }
    }
}

/// Seed of one run, independent of scheduling and of the other runs.
pub fn run_seed(base_seed: u64, instance: &str, solver: &str, repetition: usize) -> u64 {
    base_seed ^ mix(&[hash_str(instance), hash_str(solver), repetition as u64])
}

struct Job<'a> {
    instance: &'a str,
    model: Result<&'a (BladeSet, DiskImbalance), &'a str>,
    solver: &'a BenchSolver,
    repetition: usize,
}

fn execute(job: &Job<'_>, base_seed: u64) -> RunRecord {
    let seed = run_seed(base_seed, job.instance, job.solver.name(), job.repetition);
    let failed = || RunRecord {
        instance: job.instance.to_string(),
        solver: job.solver.name().to_string(),
        repetition: job.repetition,
        seed,
        valid: false,
        imbalance: None,
        wall_time_ms: None,
        meets_threshold: false,
    };
    let (blades, disk) = match job.model {
        Ok(m) => (&m.0, &m.1),
        Err(_) => return failed(),
    };
    let started = Instant::now();
    let outcome = job.solver.solve(blades, disk, seed);
    let wall_time_ms = started.elapsed().as_secs_f64() * 1e3;
    match outcome {
        Ok(report) => {
            let d = report.d();
            RunRecord {
                valid: report.valid(),
                imbalance: d,
                wall_time_ms: Some(wall_time_ms),
                meets_threshold: d.is_some_and(|d| d <= IMBALANCE_THRESHOLD),
                ..failed()
            }
        }
        Err(e) => {
            log::error!("{} on {} (repetition {}): {e}", job.solver, job.instance, job.repetition);
            failed()
        }
    }
}

/// Runs every (instance, solver, repetition) triple and passes each record to
/// `emit` in schedule order: instances as listed, then solvers, then
/// repetitions. An instance that fails to load yields one error record per
/// scheduled run, so the record count is always the product of the three.
pub fn run_benchmark(
    manifest: &Manifest,
    solvers: &[BenchSolver],
    plan: &BenchPlan,
    mut emit: impl FnMut(&RunRecord) -> Result<(), BenchError>,
) -> Result<Vec<RunRecord>, BenchError> {
    if solvers.is_empty() {
        return Err(BenchError::NoSolvers);
    }
    // Instance IO happens up front and is not part of any timing.
    let models: Vec<Result<(BladeSet, DiskImbalance), String>> = manifest
        .instances
        .iter()
        .map(|entry| {
            load(&manifest.resolve(entry)).map_err(|e| {
                log::error!("skipping instance {}: {e}", entry.name);
                e.to_string()
            })
        })
        .collect();
    let mut jobs = Vec::new();
    for (entry, model) in manifest.instances.iter().zip(&models) {
        for solver in solvers {
            for repetition in 0..plan.repetitions {
                jobs.push(Job { instance: &entry.name, model: model.as_ref().map_err(String::as_str), solver, repetition });
            }
        }
    }

    let mut records = Vec::with_capacity(jobs.len());
    let workers = plan.jobs.clamp(1, jobs.len().max(1));
    if workers == 1 {
        for job in &jobs {
            let record = execute(job, plan.base_seed);
            emit(&record)?;
            records.push(record);
        }
        return Ok(records);
    }

    let next = AtomicUsize::new(0);
    let stop = AtomicBool::new(false);
    let (tx, rx) = mpsc::channel::<(usize, RunRecord)>();
    let mut failure = None;
    std::thread::scope(|scope| {
        for _ in 0..workers {
            let tx = tx.clone();
            let (jobs, next, stop) = (&jobs, &next, &stop);
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= jobs.len() || stop.load(Ordering::Relaxed) {
                    break;
                }
                if tx.send((i, execute(&jobs[i], plan.base_seed))).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        // Out-of-order completions wait here until their predecessors arrive.
        let mut pending = BTreeMap::new();
        for (i, record) in rx {
            pending.insert(i, record);
            while let Some(record) = pending.remove(&records.len()) {
                if let Err(e) = emit(&record) {
                    stop.store(true, Ordering::Relaxed);
                    failure = Some(e);
                    return;
                }
                records.push(record);
            }
        }
    });
    match failure {
        Some(e) => Err(e),
        None => Ok(records),
    }
}
