//! Simulated annealing directly over permutations.
//!
//! The state is always a permutation, so every output is valid. A move swaps
//! the slots of two blades; its effect on the residual vector is
//! `(m_a − m_b)(z_σ(b) − z_σ(a))`, which gives the change of `d²` in O(1).

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{Assignment, BladeSet, DiskImbalance, SlotGeometry};
use crate::scalar::Real;

use super::{heuristic_assignment, metropolis, AnnealSchedule, SolveError, SolveReport};

/// Default sweep count; one sweep is `N` proposed swaps.
pub const IMBALANCE_SA_SWEEPS: usize = 2000;

/// Ratio `t_final / t_initial` of the default schedule.
const DEFAULT_COOLING_RANGE: f64 = 1e-6;

/// Default schedule: `t_initial` is the larger of `d²(heuristic) / N` and the
/// mean `|Δ|` of swaps around the heuristic assignment, cooled by six orders
/// of magnitude. Without the second term a good heuristic start leaves the
/// walk too cold to move at all.
pub fn default_imbalance_schedule<T: Real>(
    blades: &BladeSet<T>,
    disk: &DiskImbalance<T>,
    sweeps: usize,
) -> Result<AnnealSchedule<T>, SolveError> {
    let n = T::from_usize_lossy(blades.len());
    let start = PermutationState::new(blades, disk, heuristic_assignment(blades));
    let floor = T::epsilon() * (disk.m0() + blades.total_mass()).powi(2);
    let t_initial = (start.d2() / n)
        .max(start.mean_abs_swap_delta()).max(floor).max(T::min_positive_value());
    AnnealSchedule::new(t_initial, t_initial * T::lit(DEFAULT_COOLING_RANGE), sweeps)
}

pub fn imbalance_sa_solve<T: Real>(
    blades: &BladeSet<T>,
    disk: &DiskImbalance<T>,
    schedule: &AnnealSchedule<T>,
    seed: u64,
) -> Result<SolveReport<T>, SolveError> {
    imbalance_sa_trace(blades, disk, schedule, seed).map(|(r, _)| r)
}

/// Like [`imbalance_sa_solve`], also returning the best `d²` after every sweep.
pub fn imbalance_sa_trace<T: Real>(
    blades: &BladeSet<T>,
    disk: &DiskImbalance<T>,
    schedule: &AnnealSchedule<T>,
    seed: u64,
) -> Result<(SolveReport<T>, Vec<T>), SolveError> {
    let started = Instant::now();
    let n = blades.len();
    let mut state = PermutationState::new(blades, disk, heuristic_assignment(blades));
    if n < 2 {
        let report = SolveReport::from_assignment("imbalance-sa", blades, disk, state.assignment, seed, started, 0)?;
        return Ok((report, Vec::new()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = state.assignment.clone();
    let mut best_d2 = state.d2();
    let mut trace = Vec::with_capacity(schedule.sweeps());
    let mut iterations = 0u64;
    for t in schedule.temperatures() {
        for _ in 0..n {
            iterations += 1;
            let a = rng.random_range(0..n);
            let mut b = rng.random_range(0..n - 1);
            if b >= a {
                b += 1;
            }
            let (delta, w) = state.swap_delta(a, b);
            if metropolis(delta, t, &mut rng) {
                state.apply_swap(a, b, w);
                let d2 = state.d2();
                if d2 < best_d2 {
                    best_d2 = d2;
                    best.clone_from(&state.assignment);
                }
            }
        }
        trace.push(best_d2);
        if best_d2 == T::zero() {
            break;
        }
    }
    let report = SolveReport::from_assignment("imbalance-sa", blades, disk, best, seed, started, iterations)?;
    Ok((report, trace))
}

/// Permutation plus its residual imbalance vector.
#[derive(Debug, Clone)]
pub(crate) struct PermutationState<'a, T> {
    masses: &'a [T],
    unit: Vec<[T; 2]>,
    assignment: Assignment,
    residual: [T; 2],
}

impl<'a, T: Real> PermutationState<'a, T> {
    pub(crate) fn new(blades: &'a BladeSet<T>, disk: &DiskImbalance<T>, assignment: Assignment) -> Self {
        let unit = SlotGeometry::new(blades.len()).expect("non-empty").unit_vectors::<T>();
        let mut residual = disk.vector();
        for (&m, &s) in blades.masses().iter().zip(assignment.slots()) {
            residual = [residual[0] + m * unit[s][0], residual[1] + m * unit[s][1]];
        }
        Self { masses: blades.masses(), unit, assignment, residual }
    }

    pub(crate) fn d2(&self) -> T {
        self.residual[0] * self.residual[0] + self.residual[1] * self.residual[1]
    }

    /// Change of `d²` when blades `a` and `b` exchange slots, and the residual shift.
    #[inline]
    pub(crate) fn swap_delta(&self, a: usize, b: usize) -> (T, [T; 2]) {
        let dm = self.masses[a] - self.masses[b];
        let za = self.unit[self.assignment.slot_of(a)];
        let zb = self.unit[self.assignment.slot_of(b)];
        let w = [dm * (zb[0] - za[0]), dm * (zb[1] - za[1])];
        let v = self.residual;
        let delta = T::lit(2.0) * (v[0] * w[0] + v[1] * w[1]) + w[0] * w[0] + w[1] * w[1];
        (delta, w)
    }

    /// Mean `|Δ|` over swaps of blades at most `SAMPLE_SPAN` apart in index.
    fn mean_abs_swap_delta(&self) -> T {
        const SAMPLE_SPAN: usize = 16;
        let n = self.masses.len();
        let (mut total, mut count) = (T::zero(), 0usize);
        for a in 0..n {
            for b in a + 1..n.min(a + 1 + SAMPLE_SPAN) {
                total = total + self.swap_delta(a, b).0.abs();
                count += 1;
            }
        }
        if count == 0 {
            T::zero()
        } else {
            total / T::from_usize_lossy(count)
        }
    }

    #[inline]
    pub(crate) fn apply_swap(&mut self, a: usize, b: usize, w: [T; 2]) {
        self.residual = [self.residual[0] + w[0], self.residual[1] + w[1]];
        self.assignment.swap_blades(a, b);
    }
}
