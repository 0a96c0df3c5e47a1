//! `tbp`: generate instances, solve them, run benchmarks and summarize results.
//!
//! Exit status: 0 on success, 1 on usage errors, 2 on data errors.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use tbp_bench::{
    parse_solvers, pooled_imbalance, read_records, run_benchmark, summarize, write_summary, BenchError, BenchPlan,
    BenchSolver, OutputFormat, RecordWriter, CORPUS_DIR_ENV, DEFAULT_REPETITIONS,
};
use tbp_core::datasets::{default_bare_imbalance, generate, load, write_corpus, Family, Manifest};
use tbp_core::decompose::{decompose_solve, DEFAULT_MAX_SUBPROBLEM};
use tbp_core::qubo::{build_qubo, DEFAULT_PENALTY_FACTOR};
use tbp_core::solvers::{Solution, IMBALANCE_SA_SWEEPS, QUBO_SA_SWEEPS};
use tbp_core::{AnnealSchedule, DecompositionConfig, SolverConfig};

#[derive(Parser)]
#[command(name = "tbp", version, about = "Turbine blade balancing: solvers and benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate one synthetic instance, or the whole benchmark corpus with --corpus.
    Generate(GenerateArgs),
    /// Solve one instance with one solver.
    Solve(SolveArgs),
    /// Run a solver portfolio over a corpus manifest.
    Bench(BenchArgs),
    /// Summarize per-run records per (instance, solver).
    Summarize(SummarizeArgs),
    /// Write the QUBO of an instance as a sparse upper-triangular matrix.
    ExportQubo(ExportArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Family: BETA, NORM, F22SYN, STG1SYN or STG2SYN.
    #[arg(long, required_unless_present = "corpus")]
    family: Option<String>,
    /// Blade count; defaults to the nominal size of the stand-in families.
    #[arg(long, short = 'n')]
    blades: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Bare disk imbalance magnitude.
    #[arg(long, conflicts_with = "with_imbalance")]
    m0: Option<f64>,
    /// Bare disk imbalance angle in radians.
    #[arg(long, requires = "m0")]
    phi0: Option<f64>,
    /// Use the default bare imbalance (magnitude 500, angle drawn from the seed).
    #[arg(long)]
    with_imbalance: bool,
    /// Write the nine-instance corpus and its manifest into this directory.
    #[arg(long, conflicts_with_all = ["family", "blades", "m0", "phi0", "output"])]
    corpus: Option<PathBuf>,
    /// Output file (default: stdout).
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct SolverArgs {
    /// heuristic, imbalance-sa, qubo-sa, tabu, brute-force or decompose.
    #[arg(long, default_value = "imbalance-sa")]
    solver: String,
    /// Annealing sweeps (imbalance-sa, qubo-sa).
    #[arg(long)]
    sweeps: Option<usize>,
    /// Initial temperature; needs --t-final.
    #[arg(long, requires = "t_final")]
    t_initial: Option<f64>,
    /// Final temperature; needs --t-initial.
    #[arg(long, requires = "t_initial")]
    t_final: Option<f64>,
    /// Penalty factor of the QUBO constraints (qubo-sa, tabu).
    #[arg(long)]
    penalty_factor: Option<f64>,
    #[arg(long)]
    tenure: Option<usize>,
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Largest sub-problem of the decomposition.
    #[arg(long)]
    max_subproblem: Option<usize>,
    /// Solver for the decomposition parts; the parameter flags above apply to it.
    #[arg(long, default_value = "qubo-sa")]
    sub_solver: String,
    /// Solver for the decomposition merge step, with default parameters.
    #[arg(long, default_value = "imbalance-sa")]
    merge_solver: String,
}

#[derive(Args)]
struct SolveArgs {
    /// Instance file.
    instance: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the decomposition trace as JSON (decompose only).
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Print the result as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Corpus manifest (default: $TBP_CORPUS_DIR/manifest.json).
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Comma-separated solver names.
    #[arg(long, value_delimiter = ',', default_value = "heuristic,imbalance-sa,qubo-sa,tabu,decompose")]
    solvers: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_REPETITIONS)]
    repetitions: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Concurrent runs.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Per-run records (default: stdout).
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Also write the summary table here.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// csv or json.
    #[arg(long, default_value = "csv")]
    format: OutputFormat,
}

#[derive(Args)]
struct SummarizeArgs {
    /// Record file written by `bench`, CSV or JSON ("-" for stdin).
    input: PathBuf,
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: OutputFormat,
}

#[derive(Args)]
struct ExportArgs {
    instance: PathBuf,
    #[arg(long, default_value_t = DEFAULT_PENALTY_FACTOR)]
    penalty_factor: f64,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

enum CliError {
    Usage(String),
    Data(String),
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::UnknownSolver(_) | BenchError::NoSolvers => Self::Usage(e.to_string()),
            other => Self::Data(other.to_string()),
        }
    }
}

fn data<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Data(e.to_string())
}

fn usage<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Usage(e.to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Summarize(a) => cmd_summarize(a),
        Command::ExportQubo(a) => cmd_export(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(CliError::Data(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| data(format!("{}: {e}", p.display())))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn cmd_generate(a: GenerateArgs) -> Result<(), CliError> {
    if let Some(dir) = a.corpus {
        let manifest = write_corpus(&dir, a.seed, a.with_imbalance).map_err(data)?;
        eprintln!("wrote {} instances to {}", manifest.instances.len(), dir.display());
        return Ok(());
    }
    let family: Family = a.family.as_deref().unwrap_or_default().parse().map_err(usage)?;
    let n = a
        .blades
        .or(family.nominal_size())
        .ok_or_else(|| usage(format!("--blades is required for {}", family.label())))?;
    let (m0, phi0) = if a.with_imbalance {
        let b = default_bare_imbalance(family, n, a.seed);
        (b.m0, b.phi0)
    } else {
        (a.m0.unwrap_or(0.0), a.phi0.unwrap_or(0.0))
    };
    let inst = generate(family, n, a.seed, m0, phi0).map_err(usage)?;
    let mut out = output(a.output.as_deref())?;
    out.write_all(inst.to_json().as_bytes()).and_then(|_| out.flush()).map_err(data)
}

fn configure_single(name: &str, a: &SolverArgs) -> Result<SolverConfig, CliError> {
    let base: SolverConfig = name.parse().map_err(usage)?;
    let schedule = |default_sweeps: usize| -> Result<Option<AnnealSchedule>, CliError> {
        match (a.t_initial, a.t_final) {
            (Some(ti), Some(tf)) => {
                AnnealSchedule::new(ti, tf, a.sweeps.unwrap_or(default_sweeps)).map(Some).map_err(usage)
            }
            _ => Ok(None),
        }
    };
    Ok(match base {
        SolverConfig::ImbalanceSa { .. } => SolverConfig::ImbalanceSa {
            schedule: schedule(IMBALANCE_SA_SWEEPS)?,
            sweeps: a.sweeps.unwrap_or(IMBALANCE_SA_SWEEPS),
        },
        SolverConfig::QuboSa { .. } => SolverConfig::QuboSa {
            schedule: schedule(QUBO_SA_SWEEPS)?,
            sweeps: a.sweeps.unwrap_or(QUBO_SA_SWEEPS),
            penalty_factor: a.penalty_factor.unwrap_or(DEFAULT_PENALTY_FACTOR),
        },
        SolverConfig::Tabu { .. } => SolverConfig::Tabu {
            tenure: a.tenure,
            max_iterations: a.max_iterations,
            penalty_factor: a.penalty_factor.unwrap_or(DEFAULT_PENALTY_FACTOR),
        },
        other => other,
    })
}

fn configure(a: &SolverArgs) -> Result<BenchSolver, CliError> {
    if a.sweeps == Some(0) {
        return Err(usage("--sweeps must be positive"));
    }
    if a.solver != "decompose" {
        return Ok(BenchSolver::Single(configure_single(&a.solver, a)?));
    }
    let cfg = DecompositionConfig::new(
        a.max_subproblem.unwrap_or(DEFAULT_MAX_SUBPROBLEM),
        configure_single(&a.sub_solver, a)?,
        a.merge_solver.parse().map_err(usage)?,
    )
    .map_err(usage)?;
    Ok(BenchSolver::Decompose(cfg))
}

fn cmd_solve(a: SolveArgs) -> Result<(), CliError> {
    let solver = configure(&a.solver)?;
    if a.trace.is_some() && !matches!(solver, BenchSolver::Decompose(_)) {
        return Err(usage("--trace needs --solver decompose"));
    }
    let (blades, disk) = load(&a.instance).map_err(data)?;
    let (report, trace) = match &solver {
        BenchSolver::Decompose(cfg) => {
            let (r, t) = decompose_solve(&blades, &disk, cfg, a.seed).map_err(data)?;
            (r, Some(t))
        }
        BenchSolver::Single(s) => (s.solve(&blades, &disk, a.seed).map_err(data)?, None),
    };
    if let (Some(path), Some(trace)) = (&a.trace, &trace) {
        let mut text = serde_json::to_string_pretty(&trace.to_json()).map_err(data)?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| data(format!("{}: {e}", path.display())))?;
    }

    let slots = report.assignment().map(|s| s.one_based());
    let violations = match &report.solution {
        Solution::Invalid { report, .. } => report.violations.len(),
        Solution::Valid(_) => 0,
    };
    let wall_time_ms = report.wall_time.as_secs_f64() * 1e3;
    let mut out = io::stdout().lock();
    let written = if a.json {
        let doc = json!({
            "instance": blades.name(),
            "solver": report.solver,
            "seed": report.seed,
            "valid": report.valid(),
            "imbalance": report.d(),
            "slots": slots,
            "violations": violations,
            "iterations": report.iterations,
            "wall_time_ms": wall_time_ms,
        });
        writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("json value serializes"))
    } else {
        let mut text = format!(
            "instance   {}\nsolver     {}\nseed       {}\nvalid      {}\n",
            blades.name(),
            report.solver,
            report.seed,
            report.valid()
        );
        match (report.d(), &slots) {
            (Some(d), Some(slots)) => {
                let list: Vec<String> = slots.iter().map(ToString::to_string).collect();
                text += &format!("imbalance  {d}\nslots      {}\n", list.join(" "));
            }
            _ => text += &format!("violations {violations}\n"),
        }
        text += &format!("iterations {}\ntime_ms    {wall_time_ms:.3}\n", report.iterations);
        out.write_all(text.as_bytes())
    };
    written.map_err(data)
}

fn cmd_bench(a: BenchArgs) -> Result<(), CliError> {
    let solvers = parse_solvers(&a.solvers)?;
    let manifest_path = match a.manifest {
        Some(p) => p,
        None => match std::env::var_os(CORPUS_DIR_ENV) {
            Some(dir) => PathBuf::from(dir).join("manifest.json"),
            None => return Err(usage(format!("no --manifest given and {CORPUS_DIR_ENV} is not set"))),
        },
    };
    let manifest = Manifest::read(&manifest_path).map_err(data)?;
    let plan = BenchPlan { repetitions: a.repetitions, base_seed: a.seed, jobs: a.jobs };
    let mut writer = RecordWriter::new(output(a.output.as_deref())?, a.format)?;
    let records = run_benchmark(&manifest, &solvers, &plan, |r| writer.write(r))?;
    writer.finish()?;

    for s in &solvers {
        if let Some(p) = pooled_imbalance(&records, s.name()) {
            log::info!("{}: {}/{} valid, imbalance {:.3} ± {:.3} (max {:.3})", s, p.valid, p.runs, p.mean, p.std, p.max);
        }
    }
    if let Some(path) = a.summary {
        if !records.is_empty() {
            write_summary(output(Some(&path))?, &summarize(&records)?, a.format)?;
        }
    }
    Ok(())
}

fn cmd_summarize(a: SummarizeArgs) -> Result<(), CliError> {
    let records = if a.input.as_os_str() == "-" {
        read_records(io::stdin().lock())?
    } else {
        let file = File::open(&a.input).map_err(|e| data(format!("{}: {e}", a.input.display())))?;
        read_records(file)?
    };
    write_summary(output(a.output.as_deref())?, &summarize(&records)?, a.format)?;
    Ok(())
}

fn cmd_export(a: ExportArgs) -> Result<(), CliError> {
    let (blades, disk) = load(&a.instance).map_err(data)?;
    let problem = build_qubo(&blades, &disk, a.penalty_factor).map_err(usage)?;
    let mut out = output(a.output.as_deref())?;
    problem.write_coo(&mut out).and_then(|_| out.flush()).map_err(data)?;
    log::info!("{}: {} variables", blades.name(), blades.len() * blades.len());
    Ok(())
}
