use std::time::Instant;

use crate::model::{Assignment, BladeSet, DiskImbalance};
use crate::scalar::Real;

use super::{SolveError, SolveReport};

/// The industrial sort-and-pair rule.
///
/// Blades are sorted by mass (descending, ties by index). Pairs are taken
/// alternately from the heavy and the light end of that list; each pair goes
/// to the lowest free slot `s` and the slot `s + ⌊N/2⌋`, the first blade of
/// the pair (in sorted order) taking `s`. With odd `N` the leftover blade
/// takes the last free slot. The bare disk imbalance is not considered.
pub fn heuristic_assignment<T: Real>(blades: &BladeSet<T>) -> Assignment {
    let n = blades.len();
    let m = blades.masses();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| m[b].partial_cmp(&m[a]).expect("masses are finite").then(a.cmp(&b)));

    let half = n / 2;
    let mut slots = vec![usize::MAX; n];
    let (mut lo, mut hi) = (0usize, n);
    // Pairs fill slots 0..half in order, so the k-th pair always finds slot k free.
    for k in 0..half {
        let (first, second) = if k % 2 == 0 {
            lo += 2;
            (order[lo - 2], order[lo - 1])
        } else {
            hi -= 2;
            (order[hi], order[hi + 1])
        };
        slots[first] = k;
        slots[second] = k + half;
    }
    if n % 2 == 1 {
        slots[order[lo]] = n - 1;
    }
    Assignment::new(slots).expect("pair placement covers every slot once")
}

pub fn heuristic_solve<T: Real>(blades: &BladeSet<T>, disk: &DiskImbalance<T>) -> Result<SolveReport<T>, SolveError> {
    let started = Instant::now();
    let a = heuristic_assignment(blades);
    SolveReport::from_assignment("heuristic", blades, disk, a, 0, started, blades.len() as u64)
}
