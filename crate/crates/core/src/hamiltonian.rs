//! Pauli-operator algebra and the pairing-model Hamiltonians.
//!
//! The qubit form of the pairing model is
//!
//! ```text
//! H_pair = sum_m (nu_m / 2)(-Z_m) + sum_{m<l} (V_ml / 2)(X_m X_l + Y_m Y_l)
//! ```
//!
//! with `Z|0> = +|0>`, energies in rad/s and hbar = 1. The pair number of a
//! basis state is its Hamming weight, which `H_pair` conserves.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{param, Error, Result};
use crate::operator::{DenseOperator, C0, CI, MAX_DENSE_QUBITS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        };
        write!(f, "{c}")
    }
}

/// A real coefficient times a tensor product of single-qubit Paulis.
/// Qubit indices are 1-based; absent qubits carry the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliTerm {
    pub coeff: f64,
    pub factors: BTreeMap<usize, Pauli>,
}

impl PauliTerm {
    pub fn new(coeff: f64, factors: &[(usize, Pauli)]) -> Result<Self> {
        let mut map = BTreeMap::new();
        for &(q, p) in factors {
            if q == 0 {
                return Err(param("qubit indices are 1-based"));
            }
            if map.insert(q, p).is_some() {
                return Err(param(format!("duplicate qubit index {q} in Pauli term")));
            }
        }
        Ok(Self { coeff, factors: map })
    }

    pub fn max_qubit(&self) -> usize {
        self.factors.keys().next_back().copied().unwrap_or(0)
    }
}

impl fmt::Display for PauliTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:+.6e}", self.coeff)?;
        if self.factors.is_empty() {
            return write!(f, " I");
        }
        for (q, p) in &self.factors {
            write!(f, " {p}{q}")?;
        }
        Ok(())
    }
}

/// A Hermitian operator as a real-weighted sum of Pauli strings on `n` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSum {
    n: usize,
    terms: Vec<PauliTerm>,
}

impl PauliSum {
    pub fn new(n: usize, terms: Vec<PauliTerm>) -> Result<Self> {
        if let Some(t) = terms.iter().find(|t| t.max_qubit() > n) {
            return Err(param(format!(
                "term {t} acts outside the {n}-qubit register"
            )));
        }
        Ok(Self { n, terms })
    }

    pub fn empty(n: usize) -> Self {
        Self { n, terms: Vec::new() }
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            n: self.n,
            terms: self
                .terms
                .iter()
                .map(|t| PauliTerm { coeff: t.coeff * s, factors: t.factors.clone() })
                .collect(),
        }
    }

    /// Concatenates the term lists (no like-term merging).
    pub fn plus(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(param(format!(
                "cannot add Pauli sums on {} and {} qubits",
                self.n, other.n
            )));
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(Self { n: self.n, terms })
    }

    /// Dense matrix, qubit 1 most significant.
    pub fn realize(&self) -> Result<DenseOperator> {
        if self.n > MAX_DENSE_QUBITS {
            return Err(Error::Capacity { qubits: self.n, limit: MAX_DENSE_QUBITS });
        }
        let dim = 1usize << self.n;
        let mut m = DMatrix::from_element(dim, dim, C0);
        for term in &self.terms {
            let mut flip = 0usize;
            for (&q, &p) in &term.factors {
                if p != Pauli::Z {
                    flip |= 1 << (self.n - q);
                }
            }
            for col in 0..dim {
                let mut phase = Complex64::new(term.coeff, 0.0);
                for (&q, &p) in &term.factors {
                    let bit = (col >> (self.n - q)) & 1;
                    let sign = if bit == 0 { 1.0 } else { -1.0 };
                    match p {
                        Pauli::X => {}
                        Pauli::Y => phase *= CI * sign,
                        Pauli::Z => phase *= sign,
                    }
                }
                m[(col ^ flip, col)] += phase;
            }
        }
        DenseOperator::from_matrix(m)
    }
}

impl fmt::Display for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in &self.terms {
            writeln!(f, "{t}")?;
        }
        Ok(())
    }
}

fn check_square_symmetric(name: &str, m: &[Vec<f64>], n: usize) -> Result<()> {
    if m.len() != n || m.iter().any(|r| r.len() != n) {
        return Err(param(format!("{name} must be {n}x{n}")));
    }
    for i in 0..n {
        for j in 0..n {
            if !m[i][j].is_finite() {
                return Err(param(format!("{name}[{i}][{j}] is not finite")));
            }
            let tol = 1e-12 * m[i][j].abs().max(m[j][i].abs()).max(1.0);
            if (m[i][j] - m[j][i]).abs() > tol {
                return Err(param(format!("{name} is not symmetric at ({i},{j})")));
            }
        }
    }
    Ok(())
}

/// Parameters of the qubit pairing Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct PairingModel {
    nu: Vec<f64>,
    coupling: Vec<Vec<f64>>,
    convention_factor: f64,
}

impl PairingModel {
    /// `nu` and `coupling` in rad/s. The coupling diagonal is ignored.
    pub fn new(nu: Vec<f64>, coupling: Vec<Vec<f64>>) -> Result<Self> {
        Self::with_convention(nu, coupling, 1.0)
    }

    pub fn with_convention(
        nu: Vec<f64>,
        coupling: Vec<Vec<f64>>,
        convention_factor: f64,
    ) -> Result<Self> {
        let n = nu.len();
        if n == 0 {
            return Err(param("pairing model needs at least one mode"));
        }
        if nu.iter().any(|x| !x.is_finite()) {
            return Err(param("on-site energies must be finite"));
        }
        check_square_symmetric("coupling", &coupling, n)?;
        if !(convention_factor.is_finite() && convention_factor > 0.0) {
            return Err(param("convention factor must be positive and finite"));
        }
        Ok(Self { nu, coupling, convention_factor })
    }

    pub fn n_modes(&self) -> usize {
        self.nu.len()
    }

    pub fn nu(&self) -> &[f64] {
        &self.nu
    }

    pub fn coupling(&self) -> &[Vec<f64>] {
        &self.coupling
    }

    pub fn convention_factor(&self) -> f64 {
        self.convention_factor
    }

    pub fn with_convention_factor(&self, factor: f64) -> Result<Self> {
        Self::with_convention(self.nu.clone(), self.coupling.clone(), factor)
    }

    /// `convention_factor * nu_m` for 0-based mode `m`.
    pub fn effective_nu(&self, m: usize) -> f64 {
        self.convention_factor * self.nu[m]
    }

    /// `convention_factor * V_ml` for 0-based modes.
    pub fn effective_coupling(&self, m: usize, l: usize) -> f64 {
        self.convention_factor * self.coupling[m][l]
    }

    /// Same on-site energies, off-diagonal couplings multiplied by `s`.
    pub fn with_scaled_coupling(&self, s: f64) -> Self {
        Self {
            nu: self.nu.clone(),
            coupling: self
                .coupling
                .iter()
                .map(|row| row.iter().map(|v| v * s).collect())
                .collect(),
            convention_factor: self.convention_factor,
        }
    }

    /// Unordered mode pairs `(m, l)`, `m < l`, 0-based, with nonzero coupling.
    pub fn coupled_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.n_modes();
        let mut out = Vec::new();
        for m in 0..n {
            for l in (m + 1)..n {
                if self.coupling[m][l] != 0.0 {
                    out.push((m, l));
                }
            }
        }
        out
    }
}

/// Parameters of the fermionic pairing model before mapping.
#[derive(Debug, Clone, PartialEq)]
pub struct FermionicPairingInput {
    pub epsilon: Vec<f64>,
    pub coupling: Vec<Vec<f64>>,
}

/// Maps fermionic parameters onto the qubit model, `nu_m = eps_m + V_mm`,
/// dropping the global energy shift.
pub fn pairing_to_qubit(input: &FermionicPairingInput) -> Result<PairingModel> {
    let n = input.epsilon.len();
    if input.coupling.len() != n || input.coupling.iter().any(|r| r.len() != n) {
        return Err(param(format!(
            "epsilon has {n} entries but coupling is {}x{}",
            input.coupling.len(),
            input.coupling.first().map_or(0, |r| r.len())
        )));
    }
    let nu = (0..n).map(|m| input.epsilon[m] + input.coupling[m][m]).collect();
    PairingModel::new(nu, input.coupling.clone())
}

/// Which piece of the pairing Hamiltonian to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HamiltonianPart {
    H0,
    Hxx,
    Hyy,
    Full,
    /// `(1 - s/S) H0 + (s/S) H_pair`.
    Adiabatic { step: usize, steps: usize },
}

pub fn build_hamiltonian(model: &PairingModel, part: HamiltonianPart) -> Result<PauliSum> {
    let n = model.n_modes();
    let f = model.convention_factor();
    let h0 = || -> Result<Vec<PauliTerm>> {
        (0..n)
            .map(|m| PauliTerm::new(-f * model.nu[m] / 2.0, &[(m + 1, Pauli::Z)]))
            .collect()
    };
    let hop = |p: Pauli| -> Result<Vec<PauliTerm>> {
        model
            .coupled_pairs()
            .into_iter()
            .map(|(m, l)| PauliTerm::new(f * model.coupling[m][l] / 2.0, &[(m + 1, p), (l + 1, p)]))
            .collect()
    };
    let terms = match part {
        HamiltonianPart::H0 => h0()?,
        HamiltonianPart::Hxx => hop(Pauli::X)?,
        HamiltonianPart::Hyy => hop(Pauli::Y)?,
        HamiltonianPart::Full => {
            let mut t = h0()?;
            t.extend(hop(Pauli::X)?);
            t.extend(hop(Pauli::Y)?);
            t
        }
        HamiltonianPart::Adiabatic { step, steps } => {
            if steps == 0 {
                return Err(param("adiabatic schedule needs S >= 1"));
            }
            if step > steps {
                return Err(param(format!("adiabatic step {step} exceeds S = {steps}")));
            }
            let r = step as f64 / steps as f64;
            let base = PauliSum::new(n, h0()?)?.scaled(1.0 - r);
            let full = build_hamiltonian(model, HamiltonianPart::Full)?.scaled(r);
            return base.plus(&full);
        }
    };
    PauliSum::new(n, terms)
}

/// Scalar-coupling Hamiltonian `sum_{i<j} (pi/2) J_ij Z_i Z_j` with `J` in Hz.
pub fn build_nmr_zz(j_hz: &[Vec<f64>]) -> Result<PauliSum> {
    let n = j_hz.len();
    check_square_symmetric("J", j_hz, n)?;
    if let Some(i) = (0..n).find(|&i| j_hz[i][i] != 0.0) {
        return Err(param(format!("J has nonzero diagonal entry at spin {}", i + 1)));
    }
    let mut terms = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if j_hz[i][j] != 0.0 {
                terms.push(PauliTerm::new(
                    PI / 2.0 * j_hz[i][j],
                    &[(i + 1, Pauli::Z), (j + 1, Pauli::Z)],
                )?);
            }
        }
    }
    PauliSum::new(n, terms)
}

/// Basis indices with exactly `pairs` qubits in `|1>`, ascending.
pub fn sector_basis(n: usize, pairs: usize) -> Result<Vec<usize>> {
    if pairs > n {
        return Err(param(format!("{pairs} pairs do not fit in {n} modes")));
    }
    if n > MAX_DENSE_QUBITS {
        return Err(Error::Capacity { qubits: n, limit: MAX_DENSE_QUBITS });
    }
    Ok((0..(1usize << n))
        .filter(|i| i.count_ones() as usize == pairs)
        .collect())
}

/// Pair-number operator `sum_m (I - Z_m)/2`, diagonal.
pub fn pair_number_operator(n: usize) -> Result<DenseOperator> {
    if n > MAX_DENSE_QUBITS {
        return Err(Error::Capacity { qubits: n, limit: MAX_DENSE_QUBITS });
    }
    let diag: Vec<f64> = (0..(1usize << n)).map(|i| i.count_ones() as f64).collect();
    Ok(DenseOperator::from_real_diagonal(&diag))
}

/// Single-qubit Pauli on qubit `q` (1-based) of an `n`-qubit register.
pub fn single_qubit(n: usize, q: usize, p: Pauli) -> Result<DenseOperator> {
    PauliSum::new(n, vec![PauliTerm::new(1.0, &[(q, p)])?])?.realize()
}
