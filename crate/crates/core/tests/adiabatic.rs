use std::f64::consts::PI;

use num_complex::Complex64;
use pairing_sim::adiabatic::{
    population_csv, population_report, prepare, prepare_with_diagnostics, AdiabaticSchedule, Evolver,
};
use pairing_sim::config::{ExperimentConfig, Preset};
use pairing_sim::exact::SectorSpectrum;
use pairing_sim::hamiltonian::{build_hamiltonian, HamiltonianPart, PairingModel};
use pairing_sim::trotter::Realizer;
use pairing_sim::StateVector;

fn h1() -> PairingModel {
    ExperimentConfig::preset(Preset::H1).model().unwrap()
}

fn init() -> StateVector {
    StateVector::basis(8, 3).unwrap()
}

fn exact(steps: usize, t_ad: f64) -> AdiabaticSchedule {
    AdiabaticSchedule::new(steps, t_ad, Evolver::Exact).unwrap()
}

#[test]
fn zero_duration_returns_init() {
    let out = prepare(&h1(), &init(), &exact(4, 0.0)).unwrap();
    assert!((out.fidelity(&init()) - 1.0).abs() < 1e-15);
}

#[test]
fn slow_schedule_reaches_ground_state() {
    let m = h1();
    let out = prepare(&m, &init(), &exact(200, 20e-3)).unwrap();
    let pops = SectorSpectrum::new(&m, 2).unwrap().populations(&out);
    assert!(pops[0] >= 0.99, "{pops:?}");
}

#[test]
fn quasiadiabatic_preset_schedule() {
    let m = h1();
    let out = prepare(&m, &init(), &exact(4, 1.0 / 700.0)).unwrap();
    let pops = SectorSpectrum::new(&m, 2).unwrap().populations(&out);
    assert!(pops[0] + pops[1] >= 0.9, "{pops:?}");
    assert!(pops[1] >= 0.02);
    assert!((out.norm() - 1.0).abs() < 1e-10);
    assert!((out.sector_populations(3)[2] - 1.0).abs() < 1e-10);
}

#[test]
fn ground_population_grows_with_steps() {
    let m = h1();
    let spec = SectorSpectrum::new(&m, 2).unwrap();
    let ground: Vec<f64> = [4, 8, 16, 32, 64]
        .iter()
        .map(|&s| spec.populations(&prepare(&m, &init(), &exact(s, 1.0 / 700.0)).unwrap())[0])
        .collect();
    for w in ground.windows(2) {
        assert!(w[1] + 0.02 >= w[0], "{ground:?}");
    }
}

#[test]
fn uncoupled_model_leaves_init_alone() {
    let m = PairingModel::new(vec![150.0 * PI, 100.0 * PI, 50.0 * PI], vec![vec![0.0; 3]; 3]).unwrap();
    let out = prepare(&m, &init(), &exact(4, 1.0 / 700.0)).unwrap();
    assert!((out.fidelity(&init()) - 1.0).abs() < 1e-12);
}

#[test]
fn h2_decoupled_level_stays_empty() {
    let cfg = ExperimentConfig::preset(Preset::H2);
    let m = cfg.model().unwrap();
    let out = prepare(&m, &init(), &exact(4, 1.0 / 700.0)).unwrap();
    let h = build_hamiltonian(&m, HamiltonianPart::Full).unwrap().realize().unwrap();
    let rows = population_report(&out, &h).unwrap();
    let total: f64 = rows.iter().map(|r| r.population).sum();
    assert!((total - 1.0).abs() < 1e-9);
    // |110> is an eigenstate of H2 that the schedule never couples to
    let decoupled = StateVector::basis(8, 6).unwrap();
    assert!(out.fidelity(&decoupled) < 1e-6);
    let pops = SectorSpectrum::new(&m, 2).unwrap().populations(&out);
    assert!(pops[1] < 1e-6, "{pops:?}");
}

#[test]
fn population_report_examples() {
    let m = h1();
    let h = build_hamiltonian(&m, HamiltonianPart::Full).unwrap().realize().unwrap();
    let spec = SectorSpectrum::new(&m, 2).unwrap();
    let g = spec.full_eigenvector(0, 3);
    let e1 = spec.full_eigenvector(1, 3);
    let rows = population_report(&g, &h).unwrap();
    let at = |rows: &[pairing_sim::adiabatic::PopulationRow], e: f64| {
        rows.iter().filter(|r| (r.energy - e).abs() < 1e-6).map(|r| r.population).sum::<f64>()
    };
    let (eg, ee) = (spec.eigen.values()[0], spec.eigen.values()[1]);
    assert!((at(&rows, eg) - 1.0).abs() < 1e-9);
    let s = 0.5f64.sqrt();
    let mix = StateVector::superpose(&[(Complex64::new(s, 0.0), &g), (Complex64::new(s, 0.0), &e1)]).unwrap();
    let rows = population_report(&mix, &h).unwrap();
    assert!((at(&rows, eg) - 0.5).abs() < 1e-9 && (at(&rows, ee) - 0.5).abs() < 1e-9);
    assert!(rows.windows(2).all(|w| w[0].energy <= w[1].energy));
    let csv = population_csv(&rows);
    assert!(csv.starts_with("eigenindex,energy_rad_per_s,population\n"));
    assert_eq!(csv.lines().count(), 9);
}

#[test]
fn trotter_and_pulse_evolvers_track_exact() {
    let cfg = ExperimentConfig::preset(Preset::H1);
    let m = cfg.model().unwrap();
    let machine = cfg.machine().unwrap();
    let spec = SectorSpectrum::new(&m, 2).unwrap();
    let reference = spec.populations(&prepare(&m, &init(), &exact(4, 1.0 / 700.0)).unwrap());
    for realizer in [
        Realizer::Ideal,
        Realizer::Nmr {
            method: pairing_sim::nmr::Method::W1,
            machine: machine.clone(),
            mode: pairing_sim::nmr::PulseMode::Delta,
        },
    ] {
        let s = AdiabaticSchedule::new(4, 1.0 / 700.0, Evolver::Trotter { k: 2, realizer }).unwrap();
        let pops = spec.populations(&prepare(&m, &init(), &s).unwrap());
        assert!((pops[0] - reference[0]).abs() < 0.05, "{pops:?} vs {reference:?}");
    }
}

#[test]
fn diagnostics_warn_on_small_gap() {
    let m = h1();
    // the preset schedule is deliberately fast: 50 pi rad/s at s = 0 is below 700/4
    let p = prepare_with_diagnostics(&m, &init(), &exact(4, 1.0 / 700.0)).unwrap();
    assert!((p.min_gap - 50.0 * PI).abs() < 1e-9);
    assert_eq!(p.warnings.len(), 1);
    let p = prepare_with_diagnostics(&m, &init(), &exact(200, 20e-3)).unwrap();
    assert!(p.warnings.is_empty());
}
