//! One-hot QUBO encoding of the balancing problem.
//!
//! Variable `x[i*N + j]` is 1 when blade `i` sits in slot `j` (both 0-based).
//! The objective matrix is `Q_obj = qᵀq + 2 diag(yᵀq)` where column `i*N + j`
//! of `q` is `m_i z_j`; the row/column one-hot penalties are expanded into the
//! same matrix. All matrices are stored symmetric, so the energy is
//! `xᵀQx = Σ_a Q_aa x_a + 2 Σ_{a<b} Q_ab x_a x_b`, and for every permutation
//! `x`, `xᵀQx + constant_offset = d²`.

use std::io::{self, Write};

use thiserror::Error;

use crate::model::{Assignment, BladeSet, DiskImbalance, SlotGeometry};
use crate::scalar::Real;

/// Penalty weights are this multiple of the minimum bound unless configured otherwise.
pub const DEFAULT_PENALTY_FACTOR: f64 = 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuboError {
    #[error("penalty factor must exceed 1, got {0}")]
    PenaltyFactor(f64),
    #[error("configuration length {0} is not a perfect square")]
    NotSquare(usize),
    #[error("configuration has {got} variables, problem expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Flat blade-major index of the pair (blade, slot).
#[inline]
pub fn var_index(n: usize, blade: usize, slot: usize) -> usize {
    blade * n + slot
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryConfiguration {
    n: usize,
    bits: Vec<bool>,
}

impl BinaryConfiguration {
    pub fn new(bits: Vec<bool>) -> Result<Self, QuboError> {
        let n = (bits.len() as f64).sqrt().round() as usize;
        if n * n != bits.len() || n == 0 {
            return Err(QuboError::NotSquare(bits.len()));
        }
        Ok(Self { n, bits })
    }

    pub fn zeros(n: usize) -> Self {
        Self { n, bits: vec![false; n * n] }
    }

    /// Side length `N` of the N×N reshaping.
    pub fn side(&self) -> usize {
        self.n
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, blade: usize, slot: usize) -> bool {
        self.bits[var_index(self.n, blade, slot)]
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Renders the bits as a `0`/`1` string in variable order.
    pub fn to_bit_string(&self) -> String {
        self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }
}

pub fn encode(assignment: &Assignment) -> BinaryConfiguration {
    let n = assignment.len();
    let mut cfg = BinaryConfiguration::zeros(n);
    for (blade, &slot) in assignment.slots().iter().enumerate() {
        cfg.bits[var_index(n, blade, slot)] = true;
    }
    cfg
}

/// A violated one-hot constraint: which row (blade) or column (slot), and its popcount.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Violation {
    Blade { index: usize, popcount: usize },
    Slot { index: usize, popcount: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidityReport {
    pub row_popcounts: Vec<usize>,
    pub column_popcounts: Vec<usize>,
    pub violations: Vec<Violation>,
}

impl ValidityReport {
    pub fn of(config: &BinaryConfiguration) -> Self {
        let n = config.side();
        let mut rows = vec![0; n];
        let mut cols = vec![0; n];
        for i in 0..n {
            for j in 0..n {
                if config.get(i, j) {
                    rows[i] += 1;
                    cols[j] += 1;
                }
            }
        }
        let mut violations = Vec::new();
        for (index, &popcount) in rows.iter().enumerate() {
            if popcount != 1 {
                violations.push(Violation::Blade { index, popcount });
            }
        }
        for (index, &popcount) in cols.iter().enumerate() {
            if popcount != 1 {
                violations.push(Violation::Slot { index, popcount });
            }
        }
        Self { row_popcounts: rows, column_popcounts: cols, violations }
    }

    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decoded {
    Valid(Assignment),
    Invalid(ValidityReport),
}

/// Reads a permutation back out of a configuration. Nothing is repaired: any
/// row or column whose popcount is not exactly one makes the result invalid.
pub fn decode(config: &BinaryConfiguration) -> Decoded {
    let report = ValidityReport::of(config);
    if !report.is_valid() {
        return Decoded::Invalid(report);
    }
    let n = config.side();
    let slots = (0..n)
        .map(|i| (0..n).find(|&j| config.get(i, j)).expect("row has exactly one bit"))
        .collect();
    Decoded::Valid(Assignment::new(slots).expect("one-hot rows and columns form a permutation"))
}

/// Strict lower bounds `(2 m0 m_i + m_i²)_i` and their maximum.
pub fn min_penalties<T: Real>(blades: &BladeSet<T>, disk: &DiskImbalance<T>) -> (Vec<T>, T) {
    let two = T::lit(2.0);
    let per_blade: Vec<T> = blades.masses().iter().map(|&m| two * disk.m0() * m + m * m).collect();
    let max = per_blade.iter().copied().fold(T::zero(), T::max);
    (per_blade, max)
}

/// Dense row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Real> DenseMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![T::zero(); dim * dim] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.dim + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.dim + c] = v;
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a - b).abs())
            .fold(T::zero(), T::max)
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.dim).all(|r| (r + 1..self.dim).all(|c| self.get(r, c) == self.get(c, r)))
    }

    /// `xᵀAx` over the set bits.
    pub fn quadratic_form(&self, bits: &[bool]) -> T {
        let on: Vec<usize> = (0..bits.len()).filter(|&a| bits[a]).collect();
        let mut e = T::zero();
        for &a in &on {
            for &b in &on {
                e = e + self.get(a, b);
            }
        }
        e
    }
}

/// The compiled QUBO of one instance.
///
/// The coefficients are kept implicitly (masses, slot vectors, penalties) so
/// large instances never have to materialize the `N² × N²` matrix; call
/// [`QuboProblem::materialize`] for a dense copy.
#[derive(Debug, Clone)]
pub struct QuboProblem<T> {
    n: usize,
    blades: BladeSet<T>,
    disk: DiskImbalance<T>,
    unit: Vec<[T; 2]>,
    lambda1: Vec<T>,
    lambda2: T,
    constant_offset: T,
}

pub fn build_qubo<T: Real>(
    blades: &BladeSet<T>,
    disk: &DiskImbalance<T>,
    penalty_factor: T,
) -> Result<QuboProblem<T>, QuboError> {
    if !(penalty_factor > T::one()) || !penalty_factor.is_finite() {
        return Err(QuboError::PenaltyFactor(penalty_factor.as_f64()));
    }
    let n = blades.len();
    let (bounds, max_bound) = min_penalties(blades, disk);
    let lambda1: Vec<T> = bounds.iter().map(|&b| penalty_factor * b).collect();
    let lambda2 = penalty_factor * max_bound;
    let m0 = disk.m0();
    let constant_offset =
        m0 * m0 + lambda1.iter().copied().sum::<T>() + T::from_usize_lossy(n) * lambda2;
    Ok(QuboProblem {
        n,
        blades: blades.clone(),
        disk: *disk,
        unit: SlotGeometry::new(n).expect("n >= 1").unit_vectors(),
        lambda1,
        lambda2,
        constant_offset,
    })
}

#[inline]
fn dot<T: Real>(a: [T; 2], b: [T; 2]) -> T {
    a[0] * b[0] + a[1] * b[1]
}

impl<T: Real> QuboProblem<T> {
    pub fn n_blades(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.n * self.n
    }

    pub fn blades(&self) -> &BladeSet<T> {
        &self.blades
    }

    pub fn disk(&self) -> &DiskImbalance<T> {
        &self.disk
    }

    pub fn lambda1(&self) -> &[T] {
        &self.lambda1
    }

    pub fn lambda2(&self) -> T {
        self.lambda2
    }

    /// Add to `xᵀQx` to obtain `H + H_C` including the `m0²` term, i.e. `d²`
    /// for every valid configuration.
    pub fn constant_offset(&self) -> T {
        self.constant_offset
    }

    #[inline]
    fn split(&self, a: usize) -> (usize, usize) {
        (a / self.n, a % self.n)
    }

    /// Diagonal entry `Q_aa`, penalties included.
    #[inline]
    pub fn linear(&self, a: usize) -> T {
        let (i, j) = self.split(a);
        let m = self.blades.masses()[i];
        m * m + T::lit(2.0) * m * dot(self.disk.vector(), self.unit[j]) - self.lambda1[i] - self.lambda2
    }

    /// Symmetric entry `Q_ab`, penalties included.
    pub fn coefficient(&self, a: usize, b: usize) -> T {
        if a == b {
            return self.linear(a);
        }
        let (i, j) = self.split(a);
        let (k, l) = self.split(b);
        let m = self.blades.masses();
        let mut q = m[i] * m[k] * dot(self.unit[j], self.unit[l]);
        if i == k {
            q = q + self.lambda1[i];
        }
        if j == l {
            q = q + self.lambda2;
        }
        q
    }

    /// Objective part built term by term from the slot angles:
    /// off-diagonal `m_i m_k cos(φ_j − φ_l)`, diagonal `m_i² + 2 m0 m_i cos(φ0 − φ_j)`.
    pub fn objective_matrix_termwise(&self) -> DenseMatrix<T> {
        let n = self.n;
        let geometry = SlotGeometry::new(n).expect("n >= 1");
        let phi: Vec<T> = (0..n).map(|j| geometry.angle(j)).collect();
        let m = self.blades.masses();
        let (m0, phi0) = (self.disk.m0(), self.disk.phi0());
        let mut out = DenseMatrix::zeros(n * n);
        for i in 0..n {
            for j in 0..n {
                let a = var_index(n, i, j);
                for k in 0..n {
                    for l in 0..n {
                        let b = var_index(n, k, l);
                        out.set(a, b, m[i] * m[k] * (phi[j] - phi[l]).cos());
                    }
                }
                let diag = out.get(a, a) + T::lit(2.0) * m0 * m[i] * (phi0 - phi[j]).cos();
                out.set(a, a, diag);
            }
        }
        out
    }

    /// Objective part as `qᵀq + 2 diag(yᵀq)` with `q[:, i*N + j] = m_i z_j`.
    pub fn objective_matrix_factored(&self) -> DenseMatrix<T> {
        let n = self.n;
        let m = self.blades.masses();
        let q: Vec<[T; 2]> = (0..n * n)
            .map(|a| {
                let (i, j) = self.split(a);
                [m[i] * self.unit[j][0], m[i] * self.unit[j][1]]
            })
            .collect();
        let y = self.disk.vector();
        let mut out = DenseMatrix::zeros(n * n);
        for a in 0..n * n {
            for b in 0..n * n {
                out.set(a, b, dot(q[a], q[b]));
            }
            let diag = out.get(a, a) + T::lit(2.0) * dot(y, q[a]);
            out.set(a, a, diag);
        }
        out
    }

    /// Penalty part `H_C` expanded into matrix form (constants go to the offset).
    pub fn penalty_matrix(&self) -> DenseMatrix<T> {
        let n = self.n;
        let mut out = DenseMatrix::zeros(n * n);
        for a in 0..n * n {
            let (i, j) = self.split(a);
            for b in 0..n * n {
                let (k, l) = self.split(b);
                let v = if a == b {
                    -self.lambda1[i] - self.lambda2
                } else {
                    let mut v = T::zero();
                    if i == k {
                        v = v + self.lambda1[i];
                    }
                    if j == l {
                        v = v + self.lambda2;
                    }
                    v
                };
                out.set(a, b, v);
            }
        }
        out
    }

    /// Full dense `Q` = objective + penalties.
    pub fn matrix(&self) -> DenseMatrix<T> {
        let mut out = self.objective_matrix_factored();
        let pen = self.penalty_matrix();
        for (o, p) in out.data.iter_mut().zip(&pen.data) {
            *o = *o + *p;
        }
        out
    }

    pub fn materialize(&self) -> DenseQubo<T> {
        DenseQubo { n: self.n, matrix: self.matrix(), constant_offset: self.constant_offset }
    }

    /// `xᵀQx` (penalties included, offset excluded).
    pub fn energy(&self, config: &BinaryConfiguration) -> Result<T, QuboError> {
        check_len(self.dim(), config.bits().len())?;
        Ok(QuboEvaluator::energy(self, config.bits()))
    }

    /// Writes the upper triangle as `i j value` lines (0-based) under a
    /// `# dim <N²> offset <c>` header. Off-diagonal values are doubled so that
    /// `Σ_{i≤j} value·x_i·x_j` equals `xᵀQx`.
    pub fn write_coo<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "# dim {} offset {}", self.dim(), self.constant_offset)?;
        let two = T::lit(2.0);
        for a in 0..self.dim() {
            writeln!(out, "{} {} {}", a, a, self.linear(a))?;
            for b in a + 1..self.dim() {
                writeln!(out, "{} {} {}", a, b, two * self.coefficient(a, b))?;
            }
        }
        Ok(())
    }
}

/// Same as [`QuboProblem::energy`], kept as a free function mirroring the other operations.
pub fn qubo_energy<T: Real>(problem: &QuboProblem<T>, config: &BinaryConfiguration) -> Result<T, QuboError> {
    problem.energy(config)
}

fn check_len(expected: usize, got: usize) -> Result<(), QuboError> {
    if expected != got {
        return Err(QuboError::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// A materialized QUBO.
#[derive(Debug, Clone)]
pub struct DenseQubo<T> {
    n: usize,
    matrix: DenseMatrix<T>,
    constant_offset: T,
}

impl<T: Real> DenseQubo<T> {
    pub fn matrix(&self) -> &DenseMatrix<T> {
        &self.matrix
    }

    pub fn n_blades(&self) -> usize {
        self.n
    }
}

/// Energy evaluation with single-bit-flip bookkeeping, as used by the QUBO-space solvers.
pub trait QuboEvaluator<T: Real>: Sync {
    type Tracker<'a>: FlipTracker<T>
    where
        Self: 'a;

    fn dim(&self) -> usize;

    fn constant_offset(&self) -> T;

    /// `xᵀQx` of the given bits.
    fn energy(&self, bits: &[bool]) -> T;

    fn tracker(&self, bits: Vec<bool>) -> Self::Tracker<'_>;
}

/// Incremental state for a current configuration.
pub trait FlipTracker<T: Real> {
    fn bits(&self) -> &[bool];

    /// Energy change if `var` were flipped.
    fn delta(&self, var: usize) -> T;

    fn flip(&mut self, var: usize);

    /// Current energy, accumulated from deltas.
    fn energy(&self) -> T;
}

impl<T: Real> QuboEvaluator<T> for QuboProblem<T> {
    type Tracker<'a> = ImplicitTracker<'a, T>;

    fn dim(&self) -> usize {
        self.n * self.n
    }

    fn constant_offset(&self) -> T {
        self.constant_offset
    }

    fn energy(&self, bits: &[bool]) -> T {
        let state = ImplicitState::new(self, bits);
        state.energy(self)
    }

    fn tracker(&self, bits: Vec<bool>) -> ImplicitTracker<'_, T> {
        let state = ImplicitState::new(self, &bits);
        let energy = state.energy(self);
        ImplicitTracker { problem: self, bits, state, energy }
    }
}

#[derive(Debug, Clone)]
struct ImplicitState<T> {
    sum: [T; 2],
    rows: Vec<usize>,
    cols: Vec<usize>,
}

impl<T: Real> ImplicitState<T> {
    fn new(p: &QuboProblem<T>, bits: &[bool]) -> Self {
        let mut s = Self { sum: [T::zero(); 2], rows: vec![0; p.n], cols: vec![0; p.n] };
        for (a, _) in bits.iter().enumerate().filter(|(_, &b)| b) {
            s.toggle(p, a, true);
        }
        s
    }

    #[inline]
    fn toggle(&mut self, p: &QuboProblem<T>, a: usize, on: bool) {
        let (i, j) = p.split(a);
        let m = p.blades.masses()[i];
        let v = [m * p.unit[j][0], m * p.unit[j][1]];
        if on {
            self.sum = [self.sum[0] + v[0], self.sum[1] + v[1]];
            self.rows[i] += 1;
            self.cols[j] += 1;
        } else {
            self.sum = [self.sum[0] - v[0], self.sum[1] - v[1]];
            self.rows[i] -= 1;
            self.cols[j] -= 1;
        }
    }

    // |S|² + 2 y·S + Σ λ1_i (r_i² − 2 r_i) + λ2 Σ (c_j² − 2 c_j)
    fn energy(&self, p: &QuboProblem<T>) -> T {
        let two = T::lit(2.0);
        let mut e = dot(self.sum, self.sum) + two * dot(p.disk.vector(), self.sum);
        for (&r, &l1) in self.rows.iter().zip(&p.lambda1) {
            let r = T::from_usize_lossy(r);
            e = e + l1 * (r * r - two * r);
        }
        for &c in &self.cols {
            let c = T::from_usize_lossy(c);
            e = e + p.lambda2 * (c * c - two * c);
        }
        e
    }
}

/// O(1)-per-delta tracker over the implicit coefficients: keeps the running
/// vector sum `S = Σ m_i z_j x_ij` and the row/column popcounts.
#[derive(Debug, Clone)]
pub struct ImplicitTracker<'a, T> {
    problem: &'a QuboProblem<T>,
    bits: Vec<bool>,
    state: ImplicitState<T>,
    energy: T,
}

impl<T: Real> FlipTracker<T> for ImplicitTracker<'_, T> {
    fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    fn delta(&self, var: usize) -> T {
        let p = self.problem;
        let (k, l) = p.split(var);
        let m = p.blades.masses()[k];
        let z = p.unit[l];
        let on = self.bits[var];
        let x = if on { T::one() } else { T::zero() };
        let own = [m * z[0] * x, m * z[1] * x];
        let rest = [self.state.sum[0] - own[0], self.state.sum[1] - own[1]];
        let field = m * dot(z, rest)
            + p.lambda1[k] * (T::from_usize_lossy(self.state.rows[k]) - x)
            + p.lambda2 * (T::from_usize_lossy(self.state.cols[l]) - x);
        let d = p.linear(var) + T::lit(2.0) * field;
        if on {
            -d
        } else {
            d
        }
    }

    fn flip(&mut self, var: usize) {
        self.energy = self.energy + self.delta(var);
        let on = !self.bits[var];
        self.bits[var] = on;
        self.state.toggle(self.problem, var, on);
    }

    fn energy(&self) -> T {
        self.energy
    }
}

impl<T: Real> QuboEvaluator<T> for DenseQubo<T> {
    type Tracker<'a> = DenseTracker<'a, T>;

    fn dim(&self) -> usize {
        self.matrix.dim()
    }

    fn constant_offset(&self) -> T {
        self.constant_offset
    }

    fn energy(&self, bits: &[bool]) -> T {
        self.matrix.quadratic_form(bits)
    }

    fn tracker(&self, bits: Vec<bool>) -> DenseTracker<'_, T> {
        let dim = self.matrix.dim();
        let mut field = vec![T::zero(); dim];
        for (a, f) in field.iter_mut().enumerate() {
            for b in (0..dim).filter(|&b| b != a && bits[b]) {
                *f = *f + self.matrix.get(a, b);
            }
        }
        let energy = self.matrix.quadratic_form(&bits);
        DenseTracker { qubo: self, bits, field, energy }
    }
}

/// Local-field tracker over a dense matrix: O(1) deltas, O(dim) per flip.
#[derive(Debug, Clone)]
pub struct DenseTracker<'a, T> {
    qubo: &'a DenseQubo<T>,
    bits: Vec<bool>,
    field: Vec<T>,
    energy: T,
}

impl<T: Real> FlipTracker<T> for DenseTracker<'_, T> {
    fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    fn delta(&self, var: usize) -> T {
        let d = self.qubo.matrix.get(var, var) + T::lit(2.0) * self.field[var];
        if self.bits[var] {
            -d
        } else {
            d
        }
    }

    fn flip(&mut self, var: usize) {
        self.energy = self.energy + self.delta(var);
        let on = !self.bits[var];
        self.bits[var] = on;
        let m = &self.qubo.matrix;
        for (b, f) in self.field.iter_mut().enumerate() {
            if b != var {
                let q = m.get(b, var);
                *f = if on { *f + q } else { *f - q };
            }
        }
    }

    fn energy(&self) -> T {
        self.energy
    }
}
