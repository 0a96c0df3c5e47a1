//! Turbine blade balancing.
//!
//! Place `N` blades of unequal mass into `N` equidistant slots of a disk that
//! carries its own bare imbalance, so that the residual imbalance `d` (the
//! distance of the centre of mass from the rotation axis) is minimal.
//!
//! * [`model`]: slot geometry and the exact objective.
//! * [`qubo`]: the one-hot QUBO encoding with derived penalty weights.
//! * [`solvers`]: heuristic baseline, permutation annealer, QUBO annealer,
//!   tabu search and an exhaustive oracle.
//! * [`decompose`]: even/odd splitting into small sub-problems plus a merge step.
//! * [`datasets`]: synthetic instance families and the instance file format.
//!
//! The numeric code is generic over [`Real`]; the aliases below fix it to `f64`.

pub mod datasets;
pub mod decompose;
pub mod model;
pub mod qubo;
mod scalar;
pub mod seeds;
pub mod solvers;

pub use scalar::Real;

pub type BladeSet = model::BladeSet<f64>;
pub type DiskImbalance = model::DiskImbalance<f64>;
pub type Imbalance = model::Imbalance<f64>;
pub type QuboProblem = qubo::QuboProblem<f64>;
pub type SolveReport = solvers::SolveReport<f64>;
pub type AnnealSchedule = solvers::AnnealSchedule<f64>;
pub type SolverConfig = solvers::SolverConfig<f64>;
pub type DecompositionConfig = decompose::DecompositionConfig<f64>;
pub type DecompositionTrace = decompose::DecompositionTrace<f64>;

pub type BladeSet32 = model::BladeSet<f32>;
pub type DiskImbalance32 = model::DiskImbalance<f32>;
pub type QuboProblem32 = qubo::QuboProblem<f32>;
pub type SolveReport32 = solvers::SolveReport<f32>;

pub use model::{Assignment, SlotGeometry};
pub use qubo::BinaryConfiguration;
