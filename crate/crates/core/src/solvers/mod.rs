//! Solver portfolio.
//!
//! Every solver returns a [`SolveReport`]. Permutation-space solvers always
//! produce a valid [`Assignment`]; the QUBO-space solvers decode their final
//! bit string and report it as invalid when it violates a one-hot constraint.

mod brute_force;
mod heuristic;
mod imbalance_sa;
mod qubo_sa;
mod tabu;

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use thiserror::Error;

pub use brute_force::{brute_force_solve, BRUTE_FORCE_MAX_BLADES};
pub use heuristic::{heuristic_assignment, heuristic_solve};
pub use imbalance_sa::{
    default_imbalance_schedule, imbalance_sa_solve, imbalance_sa_trace, IMBALANCE_SA_SWEEPS,
};
pub use qubo_sa::{default_qubo_schedule, qubo_sa_solve, qubo_sa_solve_with, QUBO_SA_SWEEPS};
pub use tabu::{default_tabu_iterations, default_tabu_tenure, tabu_solve, tabu_solve_with};

use crate::model::{imbalance, Assignment, BladeSet, DiskImbalance, Imbalance, ModelError};
use crate::qubo::{build_qubo, decode, BinaryConfiguration, Decoded, QuboError, ValidityReport, DEFAULT_PENALTY_FACTOR};
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Qubo(#[from] QuboError),
    #[error("{solver} supports at most {max} blades, got {n}")]
    TooLarge { solver: &'static str, n: usize, max: usize },
    #[error("invalid annealing schedule: {0}")]
    Schedule(String),
    #[error("unknown solver `{0}`")]
    UnknownSolver(String),
}

/// Geometric cooling `t_k = t_initial · alpha^k` over `sweeps` sweeps, with
/// `alpha` chosen so the last sweep runs at `t_final`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnealSchedule<T> {
    t_initial: T,
    t_final: T,
    sweeps: usize,
}

impl<T: Real> AnnealSchedule<T> {
    pub fn new(t_initial: T, t_final: T, sweeps: usize) -> Result<Self, SolveError> {
        if !(t_initial.is_finite() && t_final > T::zero() && t_final < t_initial) {
            return Err(SolveError::Schedule(format!(
                "need 0 < t_final < t_initial, got t_initial = {t_initial}, t_final = {t_final}"
            )));
        }
        if sweeps == 0 {
            return Err(SolveError::Schedule("sweeps must be positive".into()));
        }
        Ok(Self { t_initial, t_final, sweeps })
    }

    pub fn t_initial(&self) -> T {
        self.t_initial
    }

    pub fn t_final(&self) -> T {
        self.t_final
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    pub fn alpha(&self) -> T {
        if self.sweeps < 2 {
            return T::one();
        }
        (self.t_final / self.t_initial).powf(T::one() / T::from_usize_lossy(self.sweeps - 1))
    }

    /// Temperatures of every sweep, strictly decreasing.
    pub fn temperatures(&self) -> impl Iterator<Item = T> {
        let alpha = self.alpha();
        let t0 = self.t_initial;
        (0..self.sweeps).scan(t0, move |t, _| {
            let cur = *t;
            *t = *t * alpha;
            Some(cur)
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Solution {
    Valid(Assignment),
    Invalid { config: BinaryConfiguration, report: ValidityReport },
}

/// Outcome of a single solver run.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport<T> {
    pub solver: String,
    pub solution: Solution,
    /// Present iff the solution is valid.
    pub imbalance: Option<Imbalance<T>>,
    pub seed: u64,
    pub wall_time: Duration,
    pub iterations: u64,
}

impl<T: Real> SolveReport<T> {
    pub(crate) fn from_assignment(
        solver: &str,
        blades: &BladeSet<T>,
        disk: &DiskImbalance<T>,
        assignment: Assignment,
        seed: u64,
        started: Instant,
        iterations: u64,
    ) -> Result<Self, SolveError> {
        let imb = imbalance(blades, disk, &assignment)?;
        Ok(Self {
            solver: solver.to_string(),
            solution: Solution::Valid(assignment),
            imbalance: Some(imb),
            seed,
            wall_time: started.elapsed(),
            iterations,
        })
    }

    pub(crate) fn from_configuration(
        solver: &str,
        blades: &BladeSet<T>,
        disk: &DiskImbalance<T>,
        config: BinaryConfiguration,
        seed: u64,
        started: Instant,
        iterations: u64,
    ) -> Result<Self, SolveError> {
        match decode(&config) {
            Decoded::Valid(a) => Self::from_assignment(solver, blades, disk, a, seed, started, iterations),
            Decoded::Invalid(report) => Ok(Self {
                solver: solver.to_string(),
                solution: Solution::Invalid { config, report },
                imbalance: None,
                seed,
                wall_time: started.elapsed(),
                iterations,
            }),
        }
    }

    pub fn valid(&self) -> bool {
        matches!(self.solution, Solution::Valid(_))
    }

    pub fn assignment(&self) -> Option<&Assignment> {
        match &self.solution {
            Solution::Valid(a) => Some(a),
            Solution::Invalid { .. } => None,
        }
    }

    pub fn d(&self) -> Option<T> {
        self.imbalance.map(|i| i.d)
    }

    /// Equality ignoring the wall-clock time.
    pub fn same_result(&self, other: &Self) -> bool {
        self.solver == other.solver
            && self.solution == other.solution
            && self.imbalance == other.imbalance
            && self.seed == other.seed
            && self.iterations == other.iterations
    }
}

/// A solver plus its parameters. `None` parameters fall back to the
/// instance-dependent defaults of each solver.
#[derive(Debug, Clone, PartialEq)]
pub enum SolverConfig<T> {
    Heuristic,
    ImbalanceSa { schedule: Option<AnnealSchedule<T>>, sweeps: usize },
    QuboSa { schedule: Option<AnnealSchedule<T>>, sweeps: usize, penalty_factor: T },
    Tabu { tenure: Option<usize>, max_iterations: Option<usize>, penalty_factor: T },
    BruteForce,
}

impl<T: Real> SolverConfig<T> {
    pub fn imbalance_sa() -> Self {
        Self::ImbalanceSa { schedule: None, sweeps: IMBALANCE_SA_SWEEPS }
    }

    pub fn qubo_sa() -> Self {
        Self::QuboSa { schedule: None, sweeps: QUBO_SA_SWEEPS, penalty_factor: T::lit(DEFAULT_PENALTY_FACTOR) }
    }

    pub fn tabu() -> Self {
        Self::Tabu { tenure: None, max_iterations: None, penalty_factor: T::lit(DEFAULT_PENALTY_FACTOR) }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Heuristic => "heuristic",
            Self::ImbalanceSa { .. } => "imbalance-sa",
            Self::QuboSa { .. } => "qubo-sa",
            Self::Tabu { .. } => "tabu",
            Self::BruteForce => "brute-force",
        }
    }

    pub fn solve(&self, blades: &BladeSet<T>, disk: &DiskImbalance<T>, seed: u64) -> Result<SolveReport<T>, SolveError> {
        match self {
            Self::Heuristic => heuristic_solve(blades, disk),
            Self::ImbalanceSa { schedule, sweeps } => {
                let schedule = match schedule {
                    Some(s) => *s,
                    None => default_imbalance_schedule(blades, disk, *sweeps)?,
                };
                imbalance_sa_solve(blades, disk, &schedule, seed)
            }
            Self::QuboSa { schedule, sweeps, penalty_factor } => {
                let problem = build_qubo(blades, disk, *penalty_factor)?;
                let schedule = match schedule {
                    Some(s) => *s,
                    None => default_qubo_schedule(&problem, *sweeps)?,
                };
                qubo_sa_solve(&problem, &schedule, seed)
            }
            Self::Tabu { tenure, max_iterations, penalty_factor } => {
                let problem = build_qubo(blades, disk, *penalty_factor)?;
                let n = blades.len();
                tabu_solve(
                    &problem,
                    tenure.unwrap_or_else(|| default_tabu_tenure(n)),
                    max_iterations.unwrap_or_else(|| default_tabu_iterations(n)),
                    seed,
                )
            }
            Self::BruteForce => brute_force_solve(blades, disk),
        }
    }
}

impl<T: Real> FromStr for SolverConfig<T> {
    type Err = SolveError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "heuristic" => Ok(Self::Heuristic),
            "imbalance-sa" => Ok(Self::imbalance_sa()),
            "qubo-sa" => Ok(Self::qubo_sa()),
            "tabu" => Ok(Self::tabu()),
            "brute-force" => Ok(Self::BruteForce),
            other => Err(SolveError::UnknownSolver(other.to_string())),
        }
    }
}

impl<T: Real> fmt::Display for SolverConfig<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Metropolis rule on an energy change `delta` at temperature `t`.
#[inline]
pub(crate) fn metropolis<T: Real, R: rand::Rng>(delta: T, t: T, rng: &mut R) -> bool {
    delta <= T::zero() || rng.random::<f64>() < (-delta / t).exp().as_f64()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_is_strictly_decreasing_and_ends_at_t_final() {
        let s = AnnealSchedule::new(100.0, 1e-4, 50).unwrap();
        let ts: Vec<f64> = s.temperatures().collect();
        assert_eq!(ts.len(), 50);
        assert!(ts.windows(2).all(|w| w[1] < w[0]));
        assert!((ts[49] - 1e-4).abs() < 1e-12);
        assert!(AnnealSchedule::new(1.0, 2.0, 10).is_err());
        assert!(AnnealSchedule::new(1.0, 0.0, 10).is_err());
        assert!(AnnealSchedule::new(1.0, 0.5, 0).is_err());
    }

    #[test]
    fn solver_names_parse() {
        for name in ["heuristic", "imbalance-sa", "qubo-sa", "tabu", "brute-force"] {
            let s: SolverConfig<f64> = name.parse().unwrap();
            assert_eq!(s.name(), name);
        }
        assert!("qbsolv".parse::<SolverConfig<f64>>().is_err());
    }
}
