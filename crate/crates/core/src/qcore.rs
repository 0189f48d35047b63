//! Dense complex linear algebra for registers of up to four qubits.
//!
//! Basis states are indexed most-significant-qubit-first: for a register
//! `Q1 Q2 Q3 Q4` the computational index is `q1·8 + q2·4 + q3·2 + q4`, with a
//! `0` bit standing for `|0⟩`. Qubit `k` of an `n`-qubit register therefore
//! lives at bit position `n - 1 - k`.
//!
//! Everything is stored densely. The largest object is a 16×16 density
//! matrix, so there is nothing to gain from sparse storage.

use std::fmt;
use std::ops::Mul;

use num_complex::Complex64;
use thiserror::Error;

/// A single complex amplitude or matrix entry.
pub type ComplexAmplitude = Complex64;

pub const MAX_QUBITS: usize = 4;

/// Normalization tolerance for state vectors.
pub const NORM_TOL: f64 = 1e-12;
/// Entrywise tolerance for Hermiticity, unitarity and trace checks.
pub const MATRIX_TOL: f64 = 1e-12;
/// Smallest eigenvalue a density matrix may have.
pub const PSD_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QcoreError {
    #[error("control and target both refer to qubit {0}")]
    IndexClash(usize),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("partial trace must keep at least one qubit")]
    EmptyKeep,
    #[error("invalid mixture weights: {0}")]
    BadWeights(String),
    #[error("qubit index {index} out of range for a {n_qubits}-qubit register")]
    QubitOutOfRange { index: usize, n_qubits: usize },
    #[error("qubit index {0} listed more than once")]
    DuplicateQubit(usize),
    #[error("unsupported register size of {0} qubits (expected 1..=4)")]
    QubitCount(usize),
    #[error("invalid {kind}: {reason}")]
    Invalid { kind: &'static str, reason: String },
}

pub type Result<T> = std::result::Result<T, QcoreError>;

fn invalid(kind: &'static str, reason: impl Into<String>) -> QcoreError {
    QcoreError::Invalid {
        kind,
        reason: reason.into(),
    }
}

fn qubits_for_dim(dim: usize) -> Result<usize> {
    if dim < 2 || !dim.is_power_of_two() {
        return Err(invalid(
            "register",
            format!("dimension {dim} is not 2^n with n >= 1"),
        ));
    }
    let n = dim.trailing_zeros() as usize;
    if n > MAX_QUBITS {
        return Err(QcoreError::QubitCount(n));
    }
    Ok(n)
}

#[inline]
fn bit_of(n_qubits: usize, qubit: usize) -> usize {
    1 << (n_qubits - 1 - qubit)
}

fn check_qubits(indices: &[usize], n_qubits: usize) -> Result<()> {
    let mut seen = 0usize;
    for &q in indices {
        if q >= n_qubits {
            return Err(QcoreError::QubitOutOfRange { index: q, n_qubits });
        }
        if seen & (1 << q) != 0 {
            return Err(QcoreError::DuplicateQubit(q));
        }
        seen |= 1 << q;
    }
    Ok(())
}

/// Row-major dense square complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: Vec<ComplexAmplitude>,
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |r, c| {
            if r == c {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> ComplexAmplitude) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                data.push(f(r, c));
            }
        }
        Self { dim, data }
    }

    /// Builds a matrix from its rows. Fails unless the rows form a nonempty square.
    pub fn from_rows(rows: Vec<Vec<ComplexAmplitude>>) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(invalid("matrix", "no rows"));
        }
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(QcoreError::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend(row);
        }
        if data.iter().any(|z| !z.is_finite()) {
            return Err(invalid("matrix", "non-finite entry"));
        }
        Ok(Self { dim, data })
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect())
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> ComplexAmplitude {
        self.data[row * self.dim + col]
    }

    #[inline]
    fn set(&mut self, row: usize, col: usize, value: ComplexAmplitude) {
        self.data[row * self.dim + col] = value;
    }

    pub fn as_slice(&self) -> &[ComplexAmplitude] {
        &self.data
    }

    pub fn rows(&self) -> Vec<Vec<ComplexAmplitude>> {
        self.data.chunks(self.dim).map(|r| r.to_vec()).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |r, c| self.get(c, r).conj())
    }

    pub fn trace(&self) -> ComplexAmplitude {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    /// Entrywise sum. Panics on dimension mismatch.
    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "matrix dimensions differ");
        Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    /// Largest entrywise modulus of `self - other`, or infinity when dims differ.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.dim != other.dim {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_abs_diff(&self.adjoint()) <= tol
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        (self * &self.adjoint()).max_abs_diff(&Self::identity(self.dim)) <= tol
    }

    pub fn apply(&self, v: &[ComplexAmplitude]) -> Vec<ComplexAmplitude> {
        assert_eq!(
            v.len(),
            self.dim,
            "vector length differs from matrix dimension"
        );
        (0..self.dim)
            .map(|r| (0..self.dim).map(|c| self.get(r, c) * v[c]).sum())
            .collect()
    }

    /// Eigenvalues of the Hermitian part `(M + M†)/2`, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let sym = nalgebra::DMatrix::from_fn(self.dim, self.dim, |r, c| {
            (self.get(r, c) + self.get(c, r).conj()) * 0.5
        });
        let mut values: Vec<f64> = nalgebra::SymmetricEigen::new(sym)
            .eigenvalues
            .iter()
            .copied()
            .collect();
        values.sort_by(f64::total_cmp);
        values
    }
}

impl Mul for &Matrix {
    type Output = Matrix;

    fn mul(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.dim, rhs.dim, "matrix dimensions differ");
        let n = self.dim;
        let mut out = Matrix::zeros(n);
        for r in 0..n {
            for k in 0..n {
                let a = self.get(r, k);
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for c in 0..n {
                    out.data[r * n + c] += a * rhs.get(k, c);
                }
            }
        }
        out
    }
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|c| {
                    let z = self.get(r, c);
                    format!("{:+.6}{:+.6}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

/// Tensor (Kronecker) product. Operand order is preserved: the left operand
/// becomes the more significant factor.
pub trait Tensor {
    type Output;
    fn kron(&self, other: &Self) -> Self::Output;
}

pub fn kron<T: Tensor>(a: &T, b: &T) -> T::Output {
    a.kron(b)
}

impl Tensor for Matrix {
    type Output = Matrix;

    fn kron(&self, other: &Self) -> Matrix {
        let (m, n) = (self.dim, other.dim);
        Matrix::from_fn(m * n, |r, c| {
            self.get(r / n, c / n) * other.get(r % n, c % n)
        })
    }
}

fn kron_vec(a: &[ComplexAmplitude], b: &[ComplexAmplitude]) -> Vec<ComplexAmplitude> {
    a.iter()
        .flat_map(|x| b.iter().map(move |y| x * y))
        .collect()
}

impl Tensor for Vec<ComplexAmplitude> {
    type Output = Vec<ComplexAmplitude>;

    fn kron(&self, other: &Self) -> Self::Output {
        kron_vec(self, other)
    }
}

/// Normalized pure state on 1..=4 qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<ComplexAmplitude>,
}

impl StateVector {
    pub fn new(amplitudes: Vec<ComplexAmplitude>) -> Result<Self> {
        let n_qubits = qubits_for_dim(amplitudes.len())?;
        if amplitudes.iter().any(|z| !z.is_finite()) {
            return Err(invalid("state vector", "non-finite amplitude"));
        }
        let norm_sq: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if (norm_sq - 1.0).abs() > NORM_TOL {
            return Err(invalid(
                "state vector",
                format!("squared norm is {norm_sq}"),
            ));
        }
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// Rescales arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(amplitudes: Vec<ComplexAmplitude>) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(invalid("state vector", "zero or non-finite norm"));
        }
        Self::new(amplitudes.into_iter().map(|z| z / norm).collect())
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::new(amplitudes.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    /// Computational basis state `|index⟩` on `n_qubits` qubits.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(QcoreError::QubitCount(n_qubits));
        }
        let dim = 1 << n_qubits;
        if index >= dim {
            return Err(invalid("basis state", format!("index {index} >= {dim}")));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[ComplexAmplitude] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> ComplexAmplitude {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `⟨ψ|op|ψ⟩`.
    pub fn expectation(&self, op: &Matrix) -> Result<ComplexAmplitude> {
        if op.dim() != self.dim() {
            return Err(QcoreError::DimensionMismatch {
                expected: self.dim(),
                found: op.dim(),
            });
        }
        let image = op.apply(&self.amplitudes);
        Ok(self
            .amplitudes
            .iter()
            .zip(&image)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }
}

impl Tensor for StateVector {
    type Output = Result<StateVector>;

    fn kron(&self, other: &Self) -> Self::Output {
        let n_qubits = self.n_qubits + other.n_qubits;
        if n_qubits > MAX_QUBITS {
            return Err(QcoreError::QubitCount(n_qubits));
        }
        Ok(StateVector {
            n_qubits,
            amplitudes: kron_vec(&self.amplitudes, &other.amplitudes),
        })
    }
}

/// Square matrix with `U·U† = I` within [`MATRIX_TOL`].
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix(Matrix);

impl UnitaryMatrix {
    pub fn new(matrix: Matrix) -> Result<Self> {
        qubits_for_dim(matrix.dim())?;
        if matrix.as_slice().iter().any(|z| !z.is_finite()) {
            return Err(invalid("unitary", "non-finite entry"));
        }
        if !matrix.is_unitary(MATRIX_TOL) {
            return Err(invalid("unitary", "U·U† differs from the identity"));
        }
        Ok(Self(matrix))
    }

    pub fn identity(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(QcoreError::QubitCount(n_qubits));
        }
        Ok(Self(Matrix::identity(1 << n_qubits)))
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn n_qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    /// Matrix product `self · other` (apply `other` first).
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(QcoreError::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(Self(&self.0 * &other.0))
    }
}

impl Tensor for UnitaryMatrix {
    type Output = Result<UnitaryMatrix>;

    fn kron(&self, other: &Self) -> Self::Output {
        let n = self.n_qubits() + other.n_qubits();
        if n > MAX_QUBITS {
            return Err(QcoreError::QubitCount(n));
        }
        Ok(UnitaryMatrix(self.0.kron(&other.0)))
    }
}

/// The Hadamard gate `(1/√2)·[[1, 1], [1, −1]]`.
pub fn hadamard() -> UnitaryMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    UnitaryMatrix(Matrix::from_real_rows(&[&[h, h], &[h, -h]]).expect("2x2 literal"))
}

pub fn pauli_x() -> UnitaryMatrix {
    UnitaryMatrix(Matrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).expect("2x2 literal"))
}

pub fn pauli_z() -> UnitaryMatrix {
    UnitaryMatrix(Matrix::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]]).expect("2x2 literal"))
}

/// `|0⟩⟨0| ⊗ I + |1⟩⟨1| ⊗ u` with the control and target embedded in an
/// `n_qubits` register.
pub fn controlled_unitary(
    u: &UnitaryMatrix,
    control: usize,
    target: usize,
    n_qubits: usize,
) -> Result<UnitaryMatrix> {
    if u.dim() != 2 {
        return Err(QcoreError::DimensionMismatch {
            expected: 2,
            found: u.dim(),
        });
    }
    if !(2..=MAX_QUBITS).contains(&n_qubits) {
        return Err(QcoreError::QubitCount(n_qubits));
    }
    if control == target {
        return Err(QcoreError::IndexClash(control));
    }
    check_qubits(&[control, target], n_qubits)?;

    let dim = 1 << n_qubits;
    let cbit = bit_of(n_qubits, control);
    let tbit = bit_of(n_qubits, target);
    let mut out = Matrix::zeros(dim);
    for col in 0..dim {
        if col & cbit == 0 {
            out.set(col, col, Complex64::new(1.0, 0.0));
            continue;
        }
        let t_in = usize::from(col & tbit != 0);
        for t_out in 0..2 {
            let row = if t_out == 1 { col | tbit } else { col & !tbit };
            out.set(row, col, u.matrix().get(t_out, t_in));
        }
    }
    Ok(UnitaryMatrix(out))
}

/// Applies `u` to the listed qubits of `state`. `targets[0]` is the most
/// significant qubit of `u`'s own index space.
pub fn apply_unitary(
    state: &StateVector,
    u: &UnitaryMatrix,
    targets: &[usize],
) -> Result<StateVector> {
    let n = state.n_qubits();
    let expected = 1usize << targets.len();
    if targets.is_empty() || u.dim() != expected {
        return Err(QcoreError::DimensionMismatch {
            expected,
            found: u.dim(),
        });
    }
    check_qubits(targets, n)?;

    let bits: Vec<usize> = targets.iter().map(|&q| bit_of(n, q)).collect();
    let mask: usize = bits.iter().sum();
    let k = targets.len();
    // sub-index j of u → set of register bits
    let spread = |j: usize| -> usize {
        bits.iter()
            .enumerate()
            .filter(|(pos, _)| j & (1 << (k - 1 - pos)) != 0)
            .map(|(_, b)| *b)
            .sum()
    };
    let gather = |i: usize| -> usize {
        bits.iter()
            .enumerate()
            .filter(|(_, &b)| i & b != 0)
            .map(|(pos, _)| 1 << (k - 1 - pos))
            .sum()
    };
    let spread_table: Vec<usize> = (0..expected).map(spread).collect();

    let amps = state.amplitudes();
    let out = (0..state.dim())
        .map(|i| {
            let row = gather(i);
            let base = i & !mask;
            spread_table
                .iter()
                .enumerate()
                .map(|(j, s)| u.matrix().get(row, j) * amps[base | s])
                .sum()
        })
        .collect();
    Ok(StateVector {
        n_qubits: n,
        amplitudes: out,
    })
}

/// Hermitian, unit-trace, positive semidefinite matrix on 1..=4 qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    entries: Matrix,
}

impl DensityMatrix {
    /// Validates every invariant, including positivity via a Hermitian eigensolve.
    pub fn new(entries: Matrix) -> Result<Self> {
        let n_qubits = qubits_for_dim(entries.dim())?;
        let rho = Self { n_qubits, entries };
        rho.validate()?;
        Ok(rho)
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.entries;
        if m.as_slice().iter().any(|z| !z.is_finite()) {
            return Err(invalid("density matrix", "non-finite entry"));
        }
        if !m.is_hermitian(MATRIX_TOL) {
            return Err(invalid("density matrix", "not Hermitian"));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > MATRIX_TOL || tr.im.abs() > MATRIX_TOL {
            return Err(invalid("density matrix", format!("trace is {tr}")));
        }
        let min = self.min_eigenvalue();
        if min < -PSD_TOL {
            return Err(invalid(
                "density matrix",
                format!("minimum eigenvalue {min} is negative"),
            ));
        }
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.entries.dim()
    }

    pub fn entries(&self) -> &Matrix {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> ComplexAmplitude {
        self.entries.get(row, col)
    }

    pub fn trace(&self) -> ComplexAmplitude {
        self.entries.trace()
    }

    /// `tr(ρ²)`.
    pub fn purity(&self) -> f64 {
        (&self.entries * &self.entries).trace().re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.entries.hermitian_eigenvalues()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// `U ρ U†`.
    pub fn evolve(&self, u: &UnitaryMatrix) -> Result<Self> {
        if u.dim() != self.dim() {
            return Err(QcoreError::DimensionMismatch {
                expected: self.dim(),
                found: u.dim(),
            });
        }
        let m = &(u.matrix() * &self.entries) * &u.matrix().adjoint();
        Ok(Self {
            n_qubits: self.n_qubits,
            entries: m,
        })
    }

    /// `tr(ρ·op)`.
    pub fn expectation(&self, op: &Matrix) -> Result<ComplexAmplitude> {
        if op.dim() != self.dim() {
            return Err(QcoreError::DimensionMismatch {
                expected: self.dim(),
                found: op.dim(),
            });
        }
        Ok((&self.entries * op).trace())
    }
}

impl Tensor for DensityMatrix {
    type Output = Result<DensityMatrix>;

    fn kron(&self, other: &Self) -> Self::Output {
        let n_qubits = self.n_qubits + other.n_qubits;
        if n_qubits > MAX_QUBITS {
            return Err(QcoreError::QubitCount(n_qubits));
        }
        Ok(DensityMatrix {
            n_qubits,
            entries: self.entries.kron(&other.entries),
        })
    }
}

/// `|ψ⟩⟨ψ|`.
pub fn density_from_state(state: &StateVector) -> DensityMatrix {
    let a = state.amplitudes();
    DensityMatrix {
        n_qubits: state.n_qubits(),
        entries: Matrix::from_fn(a.len(), |r, c| a[r] * a[c].conj()),
    }
}

/// Convex combination `Σ wᵢ ρᵢ`.
pub fn mix(components: &[(f64, DensityMatrix)]) -> Result<DensityMatrix> {
    let Some((_, first)) = components.first() else {
        return Err(QcoreError::BadWeights("no components".into()));
    };
    let mut total = 0.0;
    for (w, rho) in components {
        if !w.is_finite() || *w < 0.0 {
            return Err(QcoreError::BadWeights(format!(
                "weight {w} is not a probability"
            )));
        }
        if rho.dim() != first.dim() {
            return Err(QcoreError::DimensionMismatch {
                expected: first.dim(),
                found: rho.dim(),
            });
        }
        total += w;
    }
    if (total - 1.0).abs() > MATRIX_TOL {
        return Err(QcoreError::BadWeights(format!("weights sum to {total}")));
    }
    let mut acc = Matrix::zeros(first.dim());
    for (w, rho) in components {
        if *w > 0.0 {
            acc = acc.add(&rho.entries.scale(*w));
        }
    }
    Ok(DensityMatrix {
        n_qubits: first.n_qubits,
        entries: acc,
    })
}

/// Reduced state on `keep`, returned in ascending qubit order.
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    if keep.is_empty() {
        return Err(QcoreError::EmptyKeep);
    }
    let n = rho.n_qubits();
    check_qubits(keep, n)?;
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    let traced: Vec<usize> = (0..n).filter(|q| !kept.contains(q)).collect();

    let compose = |kept_index: usize, traced_index: usize| -> usize {
        let mut full = 0;
        for (pos, &q) in kept.iter().enumerate() {
            if kept_index & (1 << (kept.len() - 1 - pos)) != 0 {
                full |= bit_of(n, q);
            }
        }
        for (pos, &q) in traced.iter().enumerate() {
            if traced_index & (1 << (traced.len() - 1 - pos)) != 0 {
                full |= bit_of(n, q);
            }
        }
        full
    };

    let out_dim = 1 << kept.len();
    let env_dim = 1 << traced.len();
    let entries = Matrix::from_fn(out_dim, |r, c| {
        (0..env_dim)
            .map(|e| rho.get(compose(r, e), compose(c, e)))
            .sum()
    });
    Ok(DensityMatrix {
        n_qubits: kept.len(),
        entries,
    })
}

/// Zeroes every coherence between basis states that disagree on any of
/// `qubits`. The diagonal is copied untouched.
pub fn dephase(rho: &DensityMatrix, qubits: &[usize]) -> Result<DensityMatrix> {
    let n = rho.n_qubits();
    check_qubits(qubits, n)?;
    let mask: usize = qubits.iter().map(|&q| bit_of(n, q)).sum();
    let entries = Matrix::from_fn(rho.dim(), |r, c| {
        if (r ^ c) & mask == 0 {
            rho.get(r, c)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    Ok(DensityMatrix {
        n_qubits: n,
        entries,
    })
}

/// Computational-basis outcome probabilities (the real diagonal).
pub fn measurement_probs(rho: &DensityMatrix) -> Vec<f64> {
    (0..rho.dim()).map(|i| rho.get(i, i).re).collect()
}
