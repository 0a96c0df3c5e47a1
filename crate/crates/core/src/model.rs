//! Disk and blade geometry plus the exact imbalance objective.
//!
//! Blades are point masses on the unit circle. Slot `j` (0-based here, 1-based
//! in the CLI output) sits at angle `2πj/N`. The bare disk contributes a fixed
//! vector `y`, and an assignment `σ` places blade `i` at slot `σ(i)`; the
//! residual imbalance is `y + Σ m_i z_σ(i)`.

use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("blade set is empty")]
    Empty,
    #[error("blade {index} has mass {value}, expected a positive finite value")]
    InvalidMass { index: usize, value: f64 },
    #[error("bare disk imbalance must be finite with non-negative magnitude (m0 = {m0}, phi0 = {phi0})")]
    InvalidDisk { m0: f64, phi0: f64 },
    #[error("slot count must be at least 1")]
    NoSlots,
    #[error("assignment length {assignment} does not match blade count {blades}")]
    DimensionMismatch { blades: usize, assignment: usize },
    #[error("assignment is not a permutation: {0}")]
    NotAPermutation(String),
}

/// The blade masses of one rotor stage.
#[derive(Debug, Clone, PartialEq)]
pub struct BladeSet<T> {
    name: String,
    masses: Vec<T>,
}

impl<T: Real> BladeSet<T> {
    pub fn new(name: impl Into<String>, masses: Vec<T>) -> Result<Self, ModelError> {
        if masses.is_empty() {
            return Err(ModelError::Empty);
        }
        for (index, &m) in masses.iter().enumerate() {
            if !(m.is_finite() && m > T::zero()) {
                return Err(ModelError::InvalidMass { index, value: m.as_f64() });
            }
        }
        Ok(Self { name: name.into(), masses })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn masses(&self) -> &[T] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn total_mass(&self) -> T {
        self.masses.iter().copied().sum()
    }

    pub fn max_mass(&self) -> T {
        self.masses.iter().copied().fold(T::zero(), T::max)
    }

    /// Sub-set of blades given by `indices` (0-based into this set).
    pub fn subset(&self, name: impl Into<String>, indices: &[usize]) -> Result<Self, ModelError> {
        Self::new(name, indices.iter().map(|&i| self.masses[i]).collect())
    }
}

/// Bare imbalance of the empty disk, kept in both polar and Cartesian form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskImbalance<T> {
    m0: T,
    phi0: T,
    y: [T; 2],
}

impl<T: Real> DiskImbalance<T> {
    /// Polar constructor. The angle is normalized into `[0, 2π)`; a zero
    /// magnitude forces the angle to 0.
    pub fn from_polar(m0: T, phi0: T) -> Result<Self, ModelError> {
        if !(m0.is_finite() && phi0.is_finite()) || m0 < T::zero() {
            return Err(ModelError::InvalidDisk { m0: m0.as_f64(), phi0: phi0.as_f64() });
        }
        let phi0 = if m0 == T::zero() { T::zero() } else { normalize_angle(phi0) };
        let y = [m0 * phi0.cos(), m0 * phi0.sin()];
        Ok(Self { m0, phi0, y })
    }

    pub fn from_cartesian(x: T, y: T) -> Result<Self, ModelError> {
        if !(x.is_finite() && y.is_finite()) {
            return Err(ModelError::InvalidDisk { m0: x.as_f64(), phi0: y.as_f64() });
        }
        let m0 = x.hypot(y);
        let phi0 = if m0 == T::zero() { T::zero() } else { normalize_angle(y.atan2(x)) };
        Ok(Self { m0, phi0, y: [x, y] })
    }

    pub fn none() -> Self {
        Self { m0: T::zero(), phi0: T::zero(), y: [T::zero(); 2] }
    }

    pub fn m0(&self) -> T {
        self.m0
    }

    pub fn phi0(&self) -> T {
        self.phi0
    }

    /// Cartesian view `y`.
    pub fn vector(&self) -> [T; 2] {
        self.y
    }
}

fn normalize_angle<T: Real>(phi: T) -> T {
    let tau = T::TAU();
    let mut r = phi % tau;
    if r < T::zero() {
        r = r + tau;
    }
    if r >= tau {
        r = T::zero();
    }
    r
}

/// `n_slots` equidistant slots, slot 0 at angle 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotGeometry {
    n_slots: usize,
}

impl SlotGeometry {
    pub fn new(n_slots: usize) -> Result<Self, ModelError> {
        if n_slots == 0 {
            return Err(ModelError::NoSlots);
        }
        Ok(Self { n_slots })
    }

    pub fn n_slots(&self) -> usize {
        self.n_slots
    }

    pub fn angle<T: Real>(&self, slot: usize) -> T {
        T::TAU() * T::from_usize_lossy(slot) / T::from_usize_lossy(self.n_slots)
    }

    pub fn unit_vector<T: Real>(&self, slot: usize) -> [T; 2] {
        let phi: T = self.angle(slot);
        [phi.cos(), phi.sin()]
    }

    pub fn unit_vectors<T: Real>(&self) -> Vec<[T; 2]> {
        (0..self.n_slots).map(|j| self.unit_vector(j)).collect()
    }
}

/// Slot angles `[φ_1, …, φ_N]` in increasing order, starting at 0.
pub fn slot_angles<T: Real>(geometry: SlotGeometry) -> Vec<T> {
    (0..geometry.n_slots()).map(|j| geometry.angle(j)).collect()
}

/// A bijection blade -> slot. Stored 0-based; `one_based` gives the 1-based view.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Assignment {
    slots: Vec<usize>,
}

impl Assignment {
    /// `slots[i]` is the 0-based slot of blade `i`.
    pub fn new(slots: Vec<usize>) -> Result<Self, ModelError> {
        let n = slots.len();
        let mut seen = vec![false; n];
        for (blade, &s) in slots.iter().enumerate() {
            if s >= n {
                return Err(ModelError::NotAPermutation(format!(
                    "blade {blade} assigned to slot {s}, only {n} slots exist"
                )));
            }
            if std::mem::replace(&mut seen[s], true) {
                return Err(ModelError::NotAPermutation(format!("slot {s} used twice")));
            }
        }
        Ok(Self { slots })
    }

    pub fn from_one_based(slots: &[usize]) -> Result<Self, ModelError> {
        if slots.contains(&0) {
            return Err(ModelError::NotAPermutation("slot index 0 in 1-based input".into()));
        }
        Self::new(slots.iter().map(|s| s - 1).collect())
    }

    pub fn identity(n: usize) -> Self {
        Self { slots: (0..n).collect() }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn slot_of(&self, blade: usize) -> usize {
        self.slots[blade]
    }

    pub fn slots(&self) -> &[usize] {
        &self.slots
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.slots.iter().map(|s| s + 1).collect()
    }

    /// `blade_in_slot[s]` is the blade mounted in slot `s`.
    pub fn blades_by_slot(&self) -> Vec<usize> {
        let mut inv = vec![0; self.slots.len()];
        for (blade, &s) in self.slots.iter().enumerate() {
            inv[s] = blade;
        }
        inv
    }

    /// Exchange the slots of two blades.
    pub fn swap_blades(&mut self, a: usize, b: usize) {
        self.slots.swap(a, b);
    }
}

/// Residual imbalance vector and its length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Imbalance<T> {
    pub d: T,
    pub vector: [T; 2],
}

fn check_dims<T>(blades: &BladeSet<T>, assignment: &Assignment) -> Result<(), ModelError> {
    if blades.masses.len() != assignment.len() {
        return Err(ModelError::DimensionMismatch {
            blades: blades.masses.len(),
            assignment: assignment.len(),
        });
    }
    Ok(())
}

/// Vector form: `y + Σ m_i z_σ(i)` and its Euclidean norm.
pub fn imbalance<T: Real>(
    blades: &BladeSet<T>,
    disk: &DiskImbalance<T>,
    assignment: &Assignment,
) -> Result<Imbalance<T>, ModelError> {
    check_dims(blades, assignment)?;
    let geometry = SlotGeometry::new(blades.len())?;
    let [mut x, mut y] = disk.vector();
    for (&m, &s) in blades.masses.iter().zip(assignment.slots()) {
        let [c, si] = geometry.unit_vector::<T>(s);
        x = x + m * c;
        y = y + m * si;
    }
    Ok(Imbalance { d: x.hypot(y), vector: [x, y] })
}

/// Squared imbalance through the cosine expansion
/// `m0² + 2 m0 Σ m_i cos(φ0 − φ_σ(i)) + Σ_ij m_i m_j cos(φ_σ(i) − φ_σ(j))`.
///
/// Shares no code with [`imbalance`]; the two are used to cross-check each other.
pub fn imbalance_squared_cosform<T: Real>(
    blades: &BladeSet<T>,
    disk: &DiskImbalance<T>,
    assignment: &Assignment,
) -> Result<T, ModelError> {
    check_dims(blades, assignment)?;
    let geometry = SlotGeometry::new(blades.len())?;
    let angles: Vec<T> = assignment.slots().iter().map(|&s| geometry.angle(s)).collect();
    let m = blades.masses();
    let (m0, phi0) = (disk.m0(), disk.phi0());
    let two = T::lit(2.0);
    let mut total = m0 * m0;
    for i in 0..m.len() {
        total = total + two * m0 * m[i] * (phi0 - angles[i]).cos();
        for j in 0..m.len() {
            total = total + m[i] * m[j] * (angles[i] - angles[j]).cos();
        }
    }
    Ok(total)
}
