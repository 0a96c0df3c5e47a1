use std::time::Instant;

use crate::model::{Assignment, BladeSet, DiskImbalance, SlotGeometry};
use crate::scalar::Real;

use super::{SolveError, SolveReport};

/// 10! ≈ 3.6M permutations.
pub const BRUTE_FORCE_MAX_BLADES: usize = 10;

/// Exact minimum over all `N!` assignments, scored with the cosine expansion
/// of `d²`. Among values within rounding distance of each other the
/// lexicographically smallest assignment wins.
pub fn brute_force_solve<T: Real>(blades: &BladeSet<T>, disk: &DiskImbalance<T>) -> Result<SolveReport<T>, SolveError> {
    let started = Instant::now();
    let n = blades.len();
    if n > BRUTE_FORCE_MAX_BLADES {
        return Err(SolveError::TooLarge { solver: "brute-force", n, max: BRUTE_FORCE_MAX_BLADES });
    }
    let geometry = SlotGeometry::new(n)?;
    let m = blades.masses();
    let (m0, phi0) = (disk.m0(), disk.phi0());
    let two = T::lit(2.0);
    // cos(φ_s − φ_t) depends only on (s − t) mod N.
    let cos_diff: Vec<T> = (0..n).map(|k| geometry.angle::<T>(k).cos()).collect();
    let disk_term: Vec<T> = (0..n).map(|s| two * m0 * (phi0 - geometry.angle::<T>(s)).cos()).collect();
    let score = |sigma: &[usize]| {
        let mut total = m0 * m0;
        for i in 0..n {
            total = total + m[i] * disk_term[sigma[i]];
            for j in 0..n {
                total = total + m[i] * m[j] * cos_diff[(sigma[i] + n - sigma[j]) % n];
            }
        }
        total
    };

    let scale = (m0 + blades.total_mass()).powi(2);
    let tie = T::lit(4.0) * T::from_usize_lossy(n + 1) * T::epsilon() * scale;
    let mut sigma: Vec<usize> = (0..n).collect();
    let mut best = sigma.clone();
    let mut best_score = score(&sigma);
    let mut evaluated = 1u64;
    while next_permutation(&mut sigma) {
        evaluated += 1;
        let s = score(&sigma);
        if s < best_score - tie {
            best_score = s;
            best.copy_from_slice(&sigma);
        }
    }
    SolveReport::from_assignment("brute-force", blades, disk, Assignment::new(best)?, 0, started, evaluated)
}

/// Advances to the next permutation in lexicographic order; false after the last one.
fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let Some(i) = (0..v.len() - 1).rev().find(|&i| v[i] < v[i + 1]) else {
        return false;
    };
    let j = (i + 1..v.len()).rev().find(|&j| v[j] > v[i]).expect("suffix has a larger element");
    v.swap(i, j);
    v[i + 1..].reverse();
    true
}
