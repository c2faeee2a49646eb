//! Stepwise (quasi)adiabatic preparation from `H0` towards `H_pair`.

use std::fmt::Write as _;

use crate::error::{param, Result};
use crate::exact::{eigendecompose, SectorSpectrum};
use crate::hamiltonian::{build_hamiltonian, HamiltonianPart, PairingModel};
use crate::operator::{DenseOperator, StateVector};
use crate::trotter::{wbl_step, Realizer, TrotterOrder, TrotterPlan};

/// How each interpolation step is evolved.
#[derive(Debug, Clone, PartialEq)]
pub enum Evolver {
    Exact,
    /// WBL3 product of `k` inner steps, implemented by `realizer`.
    Trotter { k: usize, realizer: Realizer },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdiabaticSchedule {
    steps: usize,
    t_ad: f64,
    evolver: Evolver,
}

impl AdiabaticSchedule {
    pub fn new(steps: usize, t_ad: f64, evolver: Evolver) -> Result<Self> {
        if steps == 0 {
            return Err(param("adiabatic schedule needs S >= 1"));
        }
        if !(t_ad.is_finite() && t_ad >= 0.0) {
            return Err(param(format!("t_ad = {t_ad} must be non-negative")));
        }
        if let Evolver::Trotter { k: 0, .. } = evolver {
            return Err(param("adiabatic Trotter evolver needs k >= 1"));
        }
        Ok(Self { steps, t_ad, evolver })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn t_ad(&self) -> f64 {
        self.t_ad
    }

    pub fn evolver(&self) -> &Evolver {
        &self.evolver
    }
}

/// Output of [`prepare_with_diagnostics`].
#[derive(Debug, Clone)]
pub struct Preparation {
    pub state: StateVector,
    /// Smallest `E1 - E0` met along the schedule in the initial state's sector.
    pub min_gap: f64,
    pub warnings: Vec<String>,
}

fn step_unitary(
    model: &PairingModel,
    step: usize,
    schedule: &AdiabaticSchedule,
) -> Result<DenseOperator> {
    let s = schedule.steps;
    match &schedule.evolver {
        Evolver::Exact => {
            let h = build_hamiltonian(model, HamiltonianPart::Adiabatic { step, steps: s })?.realize()?;
            Ok(eigendecompose(&h)?.propagator(schedule.t_ad))
        }
        Evolver::Trotter { k, realizer } => {
            // (1 - s/S) H0 + (s/S) H_pair = H0 + (s/S)(Hxx + Hyy)
            let scaled = model.with_scaled_coupling(step as f64 / s as f64);
            let plan = TrotterPlan::new(schedule.t_ad, *k, TrotterOrder::Wbl3)?;
            wbl_step(&scaled, &plan, realizer)
        }
    }
}

/// Applies the evolution under `H_ad(s)` for `t_ad` at each `s = 0..=S`.
pub fn prepare(
    model: &PairingModel,
    init: &StateVector,
    schedule: &AdiabaticSchedule,
) -> Result<StateVector> {
    if init.dim() != 1 << model.n_modes() {
        return Err(param("initial state does not match the model register"));
    }
    if schedule.t_ad == 0.0 {
        return Ok(init.clone());
    }
    let mut psi = init.clone();
    for step in 0..=schedule.steps {
        psi = step_unitary(model, step, schedule)?.apply(&psi)?;
    }
    Ok(psi)
}

/// Like [`prepare`], also scanning the instantaneous gap of the initial
/// state's pair sector and warning when it drops below `1/(S t_ad)`.
pub fn prepare_with_diagnostics(
    model: &PairingModel,
    init: &StateVector,
    schedule: &AdiabaticSchedule,
) -> Result<Preparation> {
    let state = prepare(model, init, schedule)?;
    let n = model.n_modes();
    let pops = init.sector_populations(n);
    let pairs = (0..=n).max_by(|&a, &b| pops[a].total_cmp(&pops[b])).unwrap_or(0);

    let mut min_gap = f64::INFINITY;
    for step in 0..=schedule.steps {
        let r = step as f64 / schedule.steps as f64;
        let spec = SectorSpectrum::new(&model.with_scaled_coupling(r), pairs)?;
        if let [e0, e1, ..] = spec.eigen.values() {
            min_gap = min_gap.min(e1 - e0);
        }
    }
    let mut warnings = Vec::new();
    if schedule.t_ad > 0.0 {
        let rate = 1.0 / (schedule.steps as f64 * schedule.t_ad);
        if min_gap < rate {
            warnings.push(format!(
                "minimum gap {min_gap:.6e} rad/s along the schedule is below 1/(S t_ad) = {rate:.6e} rad/s"
            ));
        }
    }
    Ok(Preparation { state, min_gap, warnings })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PopulationRow {
    pub index: usize,
    pub energy: f64,
    pub population: f64,
}

/// Eigenstate populations of `state` under `h`, sorted by energy.
pub fn population_report(state: &StateVector, h: &DenseOperator) -> Result<Vec<PopulationRow>> {
    let eig = eigendecompose(h)?;
    let pops = eig.populations(state)?;
    Ok(eig
        .values()
        .iter()
        .zip(pops)
        .enumerate()
        .map(|(index, (&energy, population))| PopulationRow { index, energy, population })
        .collect())
}

pub fn population_csv(rows: &[PopulationRow]) -> String {
    let mut out = String::from("eigenindex,energy_rad_per_s,population\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{}", r.index, r.energy, r.population);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn schedule_validation() {
        assert!(AdiabaticSchedule::new(0, 1e-3, Evolver::Exact).is_err());
        assert!(AdiabaticSchedule::new(4, -1.0, Evolver::Exact).is_err());
        assert!(AdiabaticSchedule::new(4, 1e-3, Evolver::Trotter { k: 0, realizer: Realizer::Ideal }).is_err());
    }

    #[test]
    fn report_on_eigenstates() {
        let h = DenseOperator::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let eig = eigendecompose(&h).unwrap();
        let g = eig.eigenvector(0);
        let rows = population_report(&g, &h).unwrap();
        assert!((rows[0].population - 1.0).abs() < 1e-12);
        assert!((rows[0].energy + 1.0).abs() < 1e-12);

        let e1 = eig.eigenvector(1);
        let c = Complex64::new(1.0, 0.0);
        let mix = StateVector::superpose(&[(c, &g), (c, &e1)]).unwrap();
        let rows = population_report(&mix, &h).unwrap();
        assert!((rows[0].population - 0.5).abs() < 1e-12);
        assert!((rows[1].population - 0.5).abs() < 1e-12);
        let sum: f64 = rows.iter().map(|r| r.population).sum();
        assert!((sum - 1.0).abs() < 1e-9);
        assert!(population_csv(&rows).starts_with("eigenindex,energy_rad_per_s,population\n0,"));
    }
}
