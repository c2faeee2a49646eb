//! Dense complex operators and state vectors.
//!
//! Basis states are indexed with qubit 1 as the most significant bit, so for
//! three qubits `|011>` is index 3.

use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest qubit count accepted by dense realizations.
pub const MAX_DENSE_QUBITS: usize = 12;

pub(crate) const C0: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const C1: Complex64 = Complex64::new(1.0, 0.0);
pub(crate) const CI: Complex64 = Complex64::new(0.0, 1.0);

/// A square complex matrix: a Hamiltonian (rad/s) or a unitary.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator(DMatrix<Complex64>);

impl DenseOperator {
    pub fn from_matrix(m: DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Contract(format!(
                "operator must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(Self(m))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::zeros(dim, dim))
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        Self(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    /// Real diagonal matrix, convenient for tests and toy Hamiltonians.
    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let d: Vec<Complex64> = diag.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::from_diagonal(&d)
    }

    /// Builds from row-major real entries.
    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Contract("rows must form a square matrix".into()));
        }
        Ok(Self(DMatrix::from_fn(n, n, |i, j| {
            Complex64::new(rows[i][j], 0.0)
        })))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.0
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.0[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.map(|z| z * s))
    }

    pub fn scale_complex(&self, s: Complex64) -> Self {
        Self(self.0.map(|z| z * s))
    }

    /// Integer power by repeated squaring.
    pub fn pow(&self, mut exp: usize) -> Self {
        let mut base = self.0.clone();
        let mut acc = DMatrix::identity(self.dim(), self.dim());
        while exp > 0 {
            if exp & 1 == 1 {
                acc = &acc * &base;
            }
            exp >>= 1;
            if exp > 0 {
                base = &base * &base;
            }
        }
        Self(acc)
    }

    /// Largest entry magnitude, `max |a_ij|`.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self - other).max_abs()
    }

    /// `max |H - H^dagger|`.
    pub fn hermiticity_error(&self) -> f64 {
        (self - &self.adjoint()).max_abs()
    }

    /// `max |U^dagger U - I|`.
    pub fn unitarity_error(&self) -> f64 {
        let prod = self.0.adjoint() * &self.0;
        (prod - DMatrix::<Complex64>::identity(self.dim(), self.dim()))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn commutator(&self, other: &Self) -> Self {
        Self(&self.0 * &other.0 - &other.0 * &self.0)
    }

    /// Largest singular value.
    pub fn spectral_norm(&self) -> f64 {
        self.0
            .clone()
            .singular_values()
            .iter()
            .cloned()
            .fold(0.0, f64::max)
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    /// Restriction to the given basis indices, in the order given.
    pub fn restrict(&self, basis: &[usize]) -> Self {
        let m = basis.len();
        Self(DMatrix::from_fn(m, m, |i, j| self.0[(basis[i], basis[j])]))
    }

    /// `|tr(A^dagger B)| / dim`: one for operators equal up to a global phase.
    pub fn phase_insensitive_overlap(&self, other: &Self) -> f64 {
        let mut acc = C0;
        for (a, b) in self.0.iter().zip(other.0.iter()) {
            acc += a.conj() * b;
        }
        acc.norm() / self.dim() as f64
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        if state.dim() != self.dim() {
            return Err(Error::Contract(format!(
                "dimension mismatch: operator {} vs state {}",
                self.dim(),
                state.dim()
            )));
        }
        Ok(StateVector(&self.0 * &state.0))
    }

    /// `<psi|A|psi>`.
    pub fn expectation(&self, state: &StateVector) -> Result<Complex64> {
        let phi = self.apply(state)?;
        Ok(state.inner(&phi))
    }
}

impl Add for &DenseOperator {
    type Output = DenseOperator;
    fn add(self, rhs: &DenseOperator) -> DenseOperator {
        DenseOperator(&self.0 + &rhs.0)
    }
}

impl Sub for &DenseOperator {
    type Output = DenseOperator;
    fn sub(self, rhs: &DenseOperator) -> DenseOperator {
        DenseOperator(&self.0 - &rhs.0)
    }
}

impl Mul for &DenseOperator {
    type Output = DenseOperator;
    fn mul(self, rhs: &DenseOperator) -> DenseOperator {
        DenseOperator(&self.0 * &rhs.0)
    }
}

/// A pure state. Constructors normalize; operations assume unit norm.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(DVector<Complex64>);

impl StateVector {
    /// Normalizes the amplitudes; a zero vector is rejected.
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        let v = DVector::from_vec(amplitudes);
        let norm = v.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Contract("state vector has zero or non-finite norm".into()));
        }
        Ok(Self(v / Complex64::new(norm, 0.0)))
    }

    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::Parameter(format!(
                "basis index {index} outside dimension {dim}"
            )));
        }
        let mut v = DVector::zeros(dim);
        v[index] = C1;
        Ok(Self(v))
    }

    /// Column `col` of an orthonormal matrix, e.g. an eigenvector.
    pub(crate) fn from_column(m: &DMatrix<Complex64>, col: usize) -> Self {
        Self(m.column(col).into_owned())
    }

    pub(crate) fn from_raw(v: DVector<Complex64>) -> Self {
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.0.dotc(&other.0)
    }

    /// `|<self|other>|^2`.
    pub fn fidelity(&self, other: &Self) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// Probability of each basis state.
    pub fn probabilities(&self) -> Vec<f64> {
        self.0.iter().map(|z| z.norm_sqr()).collect()
    }

    /// Total probability in each Hamming-weight sector, indexed by weight.
    pub fn sector_populations(&self, n_qubits: usize) -> Vec<f64> {
        let mut out = vec![0.0; n_qubits + 1];
        for (idx, z) in self.0.iter().enumerate() {
            out[(idx as u64).count_ones() as usize] += z.norm_sqr();
        }
        out
    }

    /// Linear combination, normalized.
    pub fn superpose(terms: &[(Complex64, &StateVector)]) -> Result<Self> {
        let dim = terms
            .first()
            .map(|(_, s)| s.dim())
            .ok_or_else(|| Error::Parameter("empty superposition".into()))?;
        let mut acc = DVector::zeros(dim);
        for (c, s) in terms {
            if s.dim() != dim {
                return Err(Error::Contract("dimension mismatch in superposition".into()));
            }
            acc += &s.0 * *c;
        }
        Self::new(acc.iter().cloned().collect())
    }
}
