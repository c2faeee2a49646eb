//! Exact diagonalization, propagators and spectral gaps.
//!
//! These are the ground truth every approximate evolution is compared with.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{param, Error, Result};
use crate::hamiltonian::{build_hamiltonian, sector_basis, HamiltonianPart, PairingModel};
use crate::operator::{DenseOperator, StateVector};

/// Default population threshold for counting an eigenstate as reachable.
pub const DEFAULT_POPULATION_FLOOR: f64 = 0.02;

/// Relative tolerance under which eigenvalues are treated as one level.
pub const DEGENERACY_TOL: f64 = 1e-8;

/// Eigenvalues ascending with matching orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    values: Vec<f64>,
    vectors: DMatrix<Complex64>,
}

impl EigenSystem {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vectors(&self) -> &DMatrix<Complex64> {
        &self.vectors
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn eigenvector(&self, k: usize) -> StateVector {
        StateVector::from_column(&self.vectors, k)
    }

    /// `exp(-i H t)` assembled from the eigenpairs.
    pub fn propagator(&self, t: f64) -> DenseOperator {
        let phases = DVector::from_iterator(
            self.dim(),
            self.values.iter().map(|&e| Complex64::from_polar(1.0, -e * t)),
        );
        let scaled = DMatrix::from_fn(self.dim(), self.dim(), |i, j| {
            self.vectors[(i, j)] * phases[j]
        });
        DenseOperator::from_matrix(scaled * self.vectors.adjoint())
            .expect("eigenvector matrix is square")
    }

    /// `|<E_k|psi>|^2` for every eigenvector, in eigenvalue order.
    pub fn populations(&self, state: &StateVector) -> Result<Vec<f64>> {
        if state.dim() != self.dim() {
            return Err(Error::Contract(format!(
                "state of dimension {} against eigensystem of dimension {}",
                state.dim(),
                self.dim()
            )));
        }
        let amps = self.vectors.adjoint() * state.amplitudes();
        Ok(amps.iter().map(|z| z.norm_sqr()).collect())
    }

    /// Groups eigenvalue indices into levels equal within `DEGENERACY_TOL` relative.
    pub fn levels(&self) -> Vec<Vec<usize>> {
        let scale = self.values.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
        let mut out: Vec<Vec<usize>> = Vec::new();
        for (i, &v) in self.values.iter().enumerate() {
            match out.last_mut() {
                Some(level) if (v - self.values[level[0]]).abs() <= DEGENERACY_TOL * scale => {
                    level.push(i)
                }
                _ => out.push(vec![i]),
            }
        }
        out
    }
}

fn hermitian_tolerance(h: &DenseOperator) -> f64 {
    1e-12 * h.max_abs().max(1.0)
}

/// Diagonalizes a Hermitian operator; eigenvalues come back ascending.
pub fn eigendecompose(h: &DenseOperator) -> Result<EigenSystem> {
    let herr = h.hermiticity_error();
    if herr > hermitian_tolerance(h) {
        return Err(Error::Contract(format!(
            "operator is not Hermitian (max |H - H^dagger| = {herr:e})"
        )));
    }
    let sym = (h.matrix() + h.matrix().adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(h.dim(), h.dim(), |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(EigenSystem { values, vectors })
}

/// `exp(-i H t)`.
pub fn propagator(h: &DenseOperator, t: f64) -> Result<DenseOperator> {
    Ok(eigendecompose(h)?.propagator(t))
}

pub fn evolve(state: &StateVector, u: &DenseOperator) -> Result<StateVector> {
    u.apply(state)
}

/// Which excited level a gap refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapTarget {
    First,
    Level(usize),
}

impl GapTarget {
    fn index(self) -> usize {
        match self {
            GapTarget::First => 1,
            GapTarget::Level(k) => k,
        }
    }
}

/// Diagonalization of `H_pair` restricted to a fixed pair-number sector,
/// together with the sector's basis indices in the full register.
#[derive(Debug, Clone)]
pub struct SectorSpectrum {
    pub basis: Vec<usize>,
    pub eigen: EigenSystem,
}

impl SectorSpectrum {
    pub fn new(model: &PairingModel, pairs: usize) -> Result<Self> {
        let basis = sector_basis(model.n_modes(), pairs)?;
        let h = build_hamiltonian(model, HamiltonianPart::Full)?.realize()?;
        let eigen = eigendecompose(&h.restrict(&basis))?;
        Ok(Self { basis, eigen })
    }

    /// Eigenvector `k` embedded back into the full register.
    pub fn full_eigenvector(&self, k: usize, n_qubits: usize) -> StateVector {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        for (row, &idx) in self.basis.iter().enumerate() {
            amps[idx] = self.eigen.vectors()[(row, k)];
        }
        StateVector::from_raw(DVector::from_vec(amps))
    }

    /// Populations of a full-register state on the sector eigenvectors.
    pub fn populations(&self, state: &StateVector) -> Vec<f64> {
        let amps = state.amplitudes();
        let proj = DVector::from_iterator(self.basis.len(), self.basis.iter().map(|&i| amps[i]));
        let coeffs = self.eigen.vectors().adjoint() * proj;
        coeffs.iter().map(|z| z.norm_sqr()).collect()
    }
}

/// `E_k - E_G` inside the sector with `pairs` pairs.
pub fn sector_gap(model: &PairingModel, pairs: usize, target: GapTarget) -> Result<f64> {
    let spec = SectorSpectrum::new(model, pairs)?;
    let k = target.index();
    let values = spec.eigen.values();
    if k == 0 || k >= values.len() {
        return Err(param(format!(
            "gap target level {k} outside sector of dimension {}",
            values.len()
        )));
    }
    Ok(values[k] - values[0])
}

/// The first excited level carrying at least `floor` population and its gap.
pub fn reachable_gap(
    model: &PairingModel,
    pairs: usize,
    prepared: &StateVector,
    floor: f64,
) -> Result<(usize, f64)> {
    if !(floor > 0.0 && floor < 1.0) {
        return Err(param(format!("population floor {floor} must lie in (0, 1)")));
    }
    if prepared.dim() != 1 << model.n_modes() {
        return Err(Error::Contract("prepared state does not match the model register".into()));
    }
    let spec = SectorSpectrum::new(model, pairs)?;
    let pops = spec.populations(prepared);
    let values = spec.eigen.values();
    for level in spec.eigen.levels().into_iter().skip(1) {
        let p: f64 = level.iter().map(|&i| pops[i]).sum();
        if p >= floor {
            let k = level[0];
            return Ok((k, values[k] - values[0]));
        }
    }
    Err(Error::NoReachableState { floor })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{single_qubit, Pauli};
    use std::f64::consts::PI;

    #[test]
    fn diagonal_input() {
        let h = DenseOperator::from_real_diagonal(&[100.0 * PI, 0.0, 50.0 * PI]);
        let e = eigendecompose(&h).unwrap();
        let want = [0.0, 50.0 * PI, 100.0 * PI];
        for (a, b) in e.values().iter().zip(want) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let h = DenseOperator::from_real_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        assert!(matches!(eigendecompose(&h), Err(Error::Contract(_))));
    }

    #[test]
    fn propagator_identity_and_pi_rotation() {
        let z = single_qubit(1, 1, Pauli::Z).unwrap();
        let u0 = propagator(&z, 0.0).unwrap();
        assert!(u0.max_abs_diff(&DenseOperator::identity(2)) < 1e-14);
        let u = propagator(&z, PI).unwrap();
        assert!(u.max_abs_diff(&DenseOperator::identity(2).scale(-1.0)) < 1e-12);
    }

    #[test]
    fn evolve_cases() {
        let psi = StateVector::basis(2, 0).unwrap();
        let id = DenseOperator::identity(2);
        assert_eq!(evolve(&psi, &id).unwrap(), psi);
        let x = single_qubit(1, 1, Pauli::X).unwrap();
        let out = evolve(&psi, &x).unwrap();
        assert!((out.fidelity(&StateVector::basis(2, 1).unwrap()) - 1.0).abs() < 1e-14);
        assert!(evolve(&StateVector::basis(4, 0).unwrap(), &x).is_err());
    }

    #[test]
    fn decoupled_model_gap() {
        let m = PairingModel::new(vec![150.0 * PI, 100.0 * PI, 50.0 * PI], vec![vec![0.0; 3]; 3])
            .unwrap();
        let g = sector_gap(&m, 2, GapTarget::First).unwrap();
        assert!((g - 50.0 * PI).abs() < 1e-9);
        assert!(sector_gap(&m, 2, GapTarget::Level(3)).is_err());
        assert!(sector_gap(&m, 2, GapTarget::Level(0)).is_err());
    }

    #[test]
    fn reachable_gap_cases() {
        let m = PairingModel::new(
            vec![150.0 * PI, 100.0 * PI, 50.0 * PI],
            vec![vec![0.0, 224.0 * PI, 0.0], vec![224.0 * PI, 0.0, 0.0], vec![0.0; 3]],
        )
        .unwrap();
        let spec = SectorSpectrum::new(&m, 2).unwrap();
        let e1 = spec.full_eigenvector(1, 3);
        let (k, gap) = reachable_gap(&m, 2, &e1, DEFAULT_POPULATION_FLOOR).unwrap();
        assert_eq!(k, 1);
        assert!((gap - (spec.eigen.values()[1] - spec.eigen.values()[0])).abs() < 1e-9);

        let g = spec.full_eigenvector(0, 3);
        assert!(matches!(
            reachable_gap(&m, 2, &g, DEFAULT_POPULATION_FLOOR),
            Err(Error::NoReachableState { .. })
        ));
        assert!(reachable_gap(&m, 2, &g, 1.5).is_err());
    }

    #[test]
    fn degenerate_levels_are_merged() {
        let h = DenseOperator::from_real_diagonal(&[0.0, 1.0, 1.0, 2.0]);
        let e = eigendecompose(&h).unwrap();
        assert_eq!(e.levels(), vec![vec![0], vec![1, 2], vec![3]]);
    }
}
