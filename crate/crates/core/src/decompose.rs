//! Even/odd decomposition into small sub-problems plus a merge step.
//!
//! The blades are listed in the order of their heuristic slots and the list is
//! halved by position parity until every part holds at most `M` blades. Each
//! part is balanced on its own equidistant disk. The residual vectors of the
//! parts then act as point masses of a new, smaller balancing problem that
//! also carries the bare disk imbalance. Its solution fixes a direction per
//! part; every part is rotated so its residual points that way and the blades
//! are rounded onto free physical slots.

use std::time::Instant;

use rayon::prelude::*;
use serde_json::{json, Value};
use thiserror::Error;

use crate::model::{imbalance, Assignment, BladeSet, DiskImbalance, SlotGeometry};
use crate::scalar::Real;
use crate::seeds::mix;
use crate::solvers::{heuristic_assignment, heuristic_solve, SolveError, SolveReport, SolverConfig};

/// Largest sub-problem handed to the sub-solver by default.
pub const DEFAULT_MAX_SUBPROBLEM: usize = 5;

/// Extra attempts with fresh seeds before a part falls back to the heuristic.
pub const LEAF_RETRIES: usize = 3;

const MERGE_STREAM: u64 = u64::MAX;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecomposeError {
    #[error("max_subproblem must be at least 2, got {0}")]
    MaxSubproblem(usize),
    #[error("decomposition needs at least 2 blades, got {0}")]
    TooFewBlades(usize),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

impl From<crate::model::ModelError> for DecomposeError {
    fn from(e: crate::model::ModelError) -> Self {
        Self::Solve(e.into())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionConfig<T> {
    max_subproblem: usize,
    pub sub_solver: SolverConfig<T>,
    pub merge_solver: SolverConfig<T>,
}

impl<T: Real> DecompositionConfig<T> {
    pub fn new(max_subproblem: usize, sub_solver: SolverConfig<T>, merge_solver: SolverConfig<T>) -> Result<Self, DecomposeError> {
        if max_subproblem < 2 {
            return Err(DecomposeError::MaxSubproblem(max_subproblem));
        }
        Ok(Self { max_subproblem, sub_solver, merge_solver })
    }

    pub fn max_subproblem(&self) -> usize {
        self.max_subproblem
    }
}

/// QUBO annealing on the parts, permutation annealing for the merge.
impl<T: Real> Default for DecompositionConfig<T> {
    fn default() -> Self {
        Self {
            max_subproblem: DEFAULT_MAX_SUBPROBLEM,
            sub_solver: SolverConfig::qubo_sa(),
            merge_solver: SolverConfig::imbalance_sa(),
        }
    }
}

/// Stable split of a list into its even and odd positions.
pub fn split<B: Clone>(list: &[B]) -> (Vec<B>, Vec<B>) {
    let even = list.iter().step_by(2).cloned().collect();
    let odd = list.iter().skip(1).step_by(2).cloned().collect();
    (even, odd)
}

/// A sub-solver run, including retries.
#[derive(Debug, Clone, PartialEq)]
pub struct SubSolve<T> {
    /// The run whose result was used: the first valid one, or the heuristic.
    pub report: SolveReport<T>,
    /// Sub-solver runs made, valid or not.
    pub attempts: usize,
    /// True when every attempt was invalid and the heuristic was used.
    pub fell_back: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeafTrace<T> {
    pub solve: SubSolve<T>,
    /// Residual of the part on its own disk, as solved.
    pub local_residual: [T; 2],
    /// Merge slot this part was assigned to.
    pub merge_slot: usize,
    /// Rotation applied before rounding onto physical slots.
    pub rotation: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceNode<T> {
    /// Blade indices (0-based) in heuristic order.
    pub blades: Vec<usize>,
    /// Contribution of these blades to the final residual vector.
    pub residual: [T; 2],
    pub children: Vec<TraceNode<T>>,
    pub leaf: Option<LeafTrace<T>>,
}

impl<T: Real> TraceNode<T> {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    /// Leaves from left to right.
    pub fn leaves(&self) -> Vec<&TraceNode<T>> {
        if self.is_leaf() {
            return vec![self];
        }
        self.children.iter().flat_map(|c| c.leaves()).collect()
    }

    fn to_json(&self) -> Value {
        let residual = [self.residual[0].as_f64(), self.residual[1].as_f64()];
        let d = residual[0].hypot(residual[1]);
        let blades: Vec<usize> = self.blades.iter().map(|b| b + 1).collect();
        match &self.leaf {
            Some(leaf) => json!({
                "blades": blades,
                "solver": leaf.solve.report.solver,
                "residual": residual,
                "d": d,
                "local_residual": [leaf.local_residual[0].as_f64(), leaf.local_residual[1].as_f64()],
                "local_d": leaf.solve.report.d().map(|v| v.as_f64()),
                "attempts": leaf.solve.attempts,
                "fell_back": leaf.solve.fell_back,
                "merge_slot": leaf.merge_slot + 1,
                "rotation": leaf.rotation.as_f64(),
            }),
            None => json!({
                "blades": blades,
                "solver": "split",
                "residual": residual,
                "d": d,
                "children": self.children.iter().map(|c| c.to_json()).collect::<Vec<_>>(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionTrace<T> {
    pub root: TraceNode<T>,
    /// Absent when the whole instance fits into one sub-problem.
    pub merge: Option<MergeTrace<T>>,
    /// Some split had odd length, so parts were solved on equidistant disks
    /// that only approximate their interleaved physical slots.
    pub equidistant_approximation: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MergeTrace<T> {
    /// Residual magnitudes used as masses, clamped away from zero.
    pub pseudo_masses: Vec<T>,
    pub solve: SubSolve<T>,
}

impl<T: Real> DecompositionTrace<T> {
    pub fn to_json(&self) -> Value {
        json!({
            "root": self.root.to_json(),
            "merge": self.merge.as_ref().map(|m| json!({
                "pseudo_masses": m.pseudo_masses.iter().map(|v| v.as_f64()).collect::<Vec<_>>(),
                "solver": m.solve.report.solver,
                "slots": m.solve.report.assignment().map(|a| a.one_based()),
                "d": m.solve.report.d().map(|v| v.as_f64()),
                "attempts": m.solve.attempts,
                "fell_back": m.solve.fell_back,
            })),
            "equidistant_approximation": self.equidistant_approximation,
        })
    }
}

/// Runs `solver`, retrying invalid results with fresh seeds and finally
/// falling back to the heuristic.
fn solve_with_retries<T: Real>(
    solver: &SolverConfig<T>,
    blades: &BladeSet<T>,
    disk: &DiskImbalance<T>,
    seed_of: impl Fn(usize) -> u64,
) -> Result<SubSolve<T>, SolveError> {
    for attempt in 0..=LEAF_RETRIES {
        let report = solver.solve(blades, disk, seed_of(attempt))?;
        if report.valid() {
            return Ok(SubSolve { report, attempts: attempt + 1, fell_back: false });
        }
        log::debug!("{} returned an invalid result for {} (attempt {})", solver.name(), blades.name(), attempt + 1);
    }
    log::warn!("{} found no valid result for {}; using the heuristic", solver.name(), blades.name());
    Ok(SubSolve { report: heuristic_solve(blades, disk)?, attempts: LEAF_RETRIES + 1, fell_back: true })
}

fn build_tree<T: Real>(list: &[usize], cap: usize, uneven: &mut bool) -> TraceNode<T> {
    let mut node = TraceNode { blades: list.to_vec(), residual: [T::zero(); 2], children: Vec::new(), leaf: None };
    if list.len() > cap {
        *uneven |= list.len() % 2 == 1;
        let (even, odd) = split(list);
        node.children = vec![build_tree(&even, cap, uneven), build_tree(&odd, cap, uneven)];
    }
    node
}

fn leaves_mut<T>(node: &mut TraceNode<T>) -> Vec<&mut TraceNode<T>> {
    if node.children.is_empty() {
        return vec![node];
    }
    node.children.iter_mut().flat_map(leaves_mut).collect()
}

fn fill_residuals<T: Real>(node: &mut TraceNode<T>, masses: &[T], unit: &[[T; 2]], assignment: &Assignment) {
    let mut r = [T::zero(); 2];
    for &b in &node.blades {
        let z = unit[assignment.slot_of(b)];
        r = [r[0] + masses[b] * z[0], r[1] + masses[b] * z[1]];
    }
    node.residual = r;
    for c in &mut node.children {
        fill_residuals(c, masses, unit, assignment);
    }
}

/// Angular distance on the circle, in `[0, π]`.
fn circular_distance<T: Real>(a: T, b: T) -> T {
    let two_pi = T::PI() + T::PI();
    let d = (a - b).abs() % two_pi;
    d.min(two_pi - d)
}

pub fn decompose_solve<T: Real>(
    blades: &BladeSet<T>,
    disk: &DiskImbalance<T>,
    config: &DecompositionConfig<T>,
    seed: u64,
) -> Result<(SolveReport<T>, DecompositionTrace<T>), DecomposeError> {
    let started = Instant::now();
    let n = blades.len();
    if n < 2 {
        return Err(DecomposeError::TooFewBlades(n));
    }
    let order = heuristic_assignment(blades).blades_by_slot();
    let mut uneven = false;
    let mut root: TraceNode<T> = build_tree(&order, config.max_subproblem, &mut uneven);

    if root.is_leaf() {
        let solve = solve_with_retries(&config.sub_solver, blades, disk, |a| if a == 0 { seed } else { mix(&[seed, 0, a as u64]) })?;
        let assignment = solve.report.assignment().expect("valid after retries").clone();
        let leaf_residual = solve.report.imbalance.expect("valid").vector;
        let iterations = solve.report.iterations;
        let unit = SlotGeometry::new(n)?.unit_vectors::<T>();
        fill_residuals(&mut root, blades.masses(), &unit, &assignment);
        root.leaf = Some(LeafTrace { solve, local_residual: leaf_residual, merge_slot: 0, rotation: T::zero() });
        let report = finish(blades, disk, assignment, seed, started, iterations)?;
        return Ok((report, DecompositionTrace { root, merge: None, equidistant_approximation: false }));
    }

    // Parts are solved independently on balanced disks of their own size.
    let parts: Vec<Vec<usize>> = root.leaves().iter().map(|l| l.blades.clone()).collect();
    let solved: Vec<SubSolve<T>> = parts
        .par_iter()
        .enumerate()
        .map(|(t, part)| {
            let sub = blades.subset(format!("{}/part{}", blades.name(), t + 1), part)?;
            solve_with_retries(&config.sub_solver, &sub, &DiskImbalance::none(), |a| mix(&[seed, t as u64, a as u64]))
        })
        .collect::<Result<_, SolveError>>()?;

    let local_residuals: Vec<[T; 2]> = solved.iter().map(|s| s.report.imbalance.expect("valid").vector).collect();
    let floor = blades.max_mass() * T::epsilon();
    let pseudo_masses: Vec<T> = local_residuals.iter().map(|r| r[0].hypot(r[1]).max(floor)).collect();
    let merge_blades = BladeSet::new(format!("{}/merge", blades.name()), pseudo_masses.clone())?;
    let merge = solve_with_retries(&config.merge_solver, &merge_blades, disk, |a| mix(&[seed, MERGE_STREAM, a as u64]))?;
    let merge_slots = merge.report.assignment().expect("valid after retries").slots().to_vec();

    // Target angle of every blade after rotating its part onto the merge direction.
    let l = parts.len();
    let merge_geometry = SlotGeometry::new(l)?;
    let mut targets: Vec<T> = vec![T::zero(); n];
    let mut rotations = Vec::with_capacity(l);
    for (t, (part, solve)) in parts.iter().zip(&solved).enumerate() {
        let r = local_residuals[t];
        let rotation = merge_geometry.angle::<T>(merge_slots[t]) - r[1].atan2(r[0]);
        rotations.push(rotation);
        let local = solve.report.assignment().expect("valid");
        let part_geometry = SlotGeometry::new(part.len())?;
        for (k, &b) in part.iter().enumerate() {
            targets[b] = part_geometry.angle::<T>(local.slot_of(k)) + rotation;
        }
    }
    let assignment = round_to_slots(blades.masses(), &targets)?;

    let unit = SlotGeometry::new(n)?.unit_vectors::<T>();
    fill_residuals(&mut root, blades.masses(), &unit, &assignment);
    let iterations = solved.iter().map(|s| s.report.iterations).sum::<u64>() + merge.report.iterations;
    for (t, (leaf, solve)) in leaves_mut(&mut root).into_iter().zip(solved).enumerate() {
        leaf.leaf = Some(LeafTrace { solve, local_residual: local_residuals[t], merge_slot: merge_slots[t], rotation: rotations[t] });
    }
    let report = finish(blades, disk, assignment, seed, started, iterations)?;
    let trace = DecompositionTrace {
        root,
        merge: Some(MergeTrace { pseudo_masses, solve: merge }),
        equidistant_approximation: uneven,
    };
    Ok((report, trace))
}

/// Heaviest blade first, each takes the free slot nearest its target angle;
/// ties go to the lower slot index.
fn round_to_slots<T: Real>(masses: &[T], targets: &[T]) -> Result<Assignment, DecomposeError> {
    let n = masses.len();
    let geometry = SlotGeometry::new(n)?;
    let angles: Vec<T> = (0..n).map(|s| geometry.angle::<T>(s)).collect();
    let mut by_mass: Vec<usize> = (0..n).collect();
    by_mass.sort_by(|&a, &b| masses[b].partial_cmp(&masses[a]).expect("finite masses").then(a.cmp(&b)));
    let mut free = vec![true; n];
    let mut slots = vec![0; n];
    for b in by_mass {
        let mut best: Option<(usize, T)> = None;
        for s in (0..n).filter(|&s| free[s]) {
            let dist = circular_distance(angles[s], targets[b]);
            if best.is_none_or(|(_, d)| dist < d) {
                best = Some((s, dist));
            }
        }
        let (s, _) = best.expect("a free slot remains for every blade");
        free[s] = false;
        slots[b] = s;
    }
    Ok(Assignment::new(slots)?)
}

/// The reported imbalance is always recomputed on the composed assignment.
fn finish<T: Real>(
    blades: &BladeSet<T>,
    disk: &DiskImbalance<T>,
    assignment: Assignment,
    seed: u64,
    started: Instant,
    iterations: u64,
) -> Result<SolveReport<T>, DecomposeError> {
    let imb = imbalance(blades, disk, &assignment)?;
    Ok(SolveReport {
        solver: "decompose".to_string(),
        solution: crate::solvers::Solution::Valid(assignment),
        imbalance: Some(imb),
        seed,
        wall_time: started.elapsed(),
        iterations,
    })
}
