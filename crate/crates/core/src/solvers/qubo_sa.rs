//! Single-bit-flip simulated annealing over the one-hot QUBO.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::qubo::{BinaryConfiguration, FlipTracker, QuboEvaluator, QuboProblem};
use crate::scalar::Real;

use super::{metropolis, AnnealSchedule, SolveError, SolveReport};

/// Default sweep count; one sweep visits every variable once.
pub const QUBO_SA_SWEEPS: usize = 1000;

/// Hot enough to cross a single constraint violation (`λ1 + λ2`) routinely,
/// cold enough at the end that objective differences of order `min m_i²·1e-6` freeze.
pub fn default_qubo_schedule<T: Real>(problem: &QuboProblem<T>, sweeps: usize) -> Result<AnnealSchedule<T>, SolveError> {
    let l1 = problem.lambda1().iter().copied().fold(T::zero(), T::max);
    let t_initial = l1 + problem.lambda2();
    let m_min = problem.blades().masses().iter().copied().fold(T::infinity(), T::min);
    let t_final = (m_min * m_min * T::lit(1e-6)).min(t_initial * T::lit(1e-6));
    AnnealSchedule::new(t_initial, t_final, sweeps)
}

pub fn qubo_sa_solve<T: Real>(problem: &QuboProblem<T>, schedule: &AnnealSchedule<T>, seed: u64) -> Result<SolveReport<T>, SolveError> {
    qubo_sa_solve_with(problem, problem, schedule, seed)
}

/// Runs on any evaluator (e.g. a materialized [`crate::qubo::DenseQubo`]);
/// `problem` supplies the instance the result is decoded and scored against.
pub fn qubo_sa_solve_with<T: Real, E: QuboEvaluator<T>>(
    evaluator: &E,
    problem: &QuboProblem<T>,
    schedule: &AnnealSchedule<T>,
    seed: u64,
) -> Result<SolveReport<T>, SolveError> {
    let started = Instant::now();
    let dim = evaluator.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let init: Vec<bool> = (0..dim).map(|_| rng.random_bool(0.5)).collect();
    let mut tracker = evaluator.tracker(init);
    let mut best_bits = tracker.bits().to_vec();
    let mut best_energy = tracker.energy();
    let mut order: Vec<usize> = (0..dim).collect();
    let mut iterations = 0u64;
    for t in schedule.temperatures() {
        order.shuffle(&mut rng);
        for &v in &order {
            iterations += 1;
            let delta = tracker.delta(v);
            if metropolis(delta, t, &mut rng) {
                tracker.flip(v);
                if tracker.energy() < best_energy {
                    best_energy = tracker.energy();
                    best_bits.copy_from_slice(tracker.bits());
                }
            }
        }
    }
    let config = BinaryConfiguration::new(best_bits)?;
    SolveReport::from_configuration("qubo-sa", problem.blades(), problem.disk(), config, seed, started, iterations)
}
