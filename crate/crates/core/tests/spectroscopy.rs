use std::f64::consts::PI;

use num_complex::Complex64;
use pairing_sim::config::{ExperimentConfig, Preset};
use pairing_sim::exact::{eigendecompose, SectorSpectrum};
use pairing_sim::hamiltonian::{build_hamiltonian, HamiltonianPart};
use pairing_sim::spectroscopy::{
    acquire, dft, epsilon_ft, fit_damped_sinusoid, idft, peak_pick, Stepper, TimeSeries,
};
use pairing_sim::{DenseOperator, StateVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn direct_dft(x: &[f64]) -> Vec<Complex64> {
    let q = x.len();
    (0..q)
        .map(|j| {
            x.iter()
                .enumerate()
                .map(|(k, v)| Complex64::from_polar(*v, -2.0 * PI * (j * k) as f64 / q as f64))
                .sum()
        })
        .collect()
}

fn generator(a: f64, tau: f64, w: f64, phi: f64, t0: f64, q: usize) -> Vec<f64> {
    (0..q)
        .map(|k| {
            let t = k as f64 * t0;
            a * (-t / tau).exp() * (w * t + phi).cos()
        })
        .collect()
}

#[test]
fn identity_stepper_gives_constant_series() {
    let psi = StateVector::basis(8, 3).unwrap();
    let s = Stepper::from_unitary(DenseOperator::identity(8), 1e-3, 1e-3).unwrap();
    let series = acquire(&psi, &s, 16, 1, None).unwrap();
    assert!(series.values.iter().all(|&v| v == 1.0));
    let series = acquire(&psi, &s, 16, 2, None).unwrap();
    assert!(series.values.iter().all(|&v| v == -1.0));
    assert!(acquire(&psi, &s, 1, 1, None).is_err());
    assert!(acquire(&psi, &s, 16, 4, None).is_err());
}

#[test]
fn exact_stepper_matches_eigen_closed_form() {
    let cfg = ExperimentConfig::preset(Preset::H1);
    let m = cfg.model().unwrap();
    let spec = SectorSpectrum::new(&m, 2).unwrap();
    let g = spec.full_eigenvector(0, 3);
    let e1 = spec.full_eigenvector(1, 3);
    let s = 0.5f64.sqrt();
    let psi = StateVector::superpose(&[(Complex64::new(s, 0.0), &g), (Complex64::new(s, 0.0), &e1)]).unwrap();

    let t0 = 1e-4;
    let series = acquire(&psi, &Stepper::exact(&m, t0).unwrap(), 300, 1, None).unwrap();
    let h = build_hamiltonian(&m, HamiltonianPart::Full).unwrap().realize().unwrap();
    let full = eigendecompose(&h).unwrap();
    let z1 = pairing_sim::hamiltonian::single_qubit(3, 1, pairing_sim::hamiltonian::Pauli::Z).unwrap();
    let zg = z1.expectation(&g).unwrap().re;
    let ze = z1.expectation(&e1).unwrap().re;
    let cross = g.inner(&z1.apply(&e1).unwrap());
    let gap = spec.eigen.values()[1] - spec.eigen.values()[0];
    for (k, v) in series.values.iter().enumerate() {
        let t = k as f64 * t0;
        // <psi(t)|Z|psi(t)> = (zg + ze)/2 + Re(cross e^{-i gap t})
        let want = 0.5 * (zg + ze) + (cross * Complex64::from_polar(1.0, -gap * t)).re;
        assert!((v - want).abs() < 1e-9, "k = {k}: {v} vs {want}");
    }
    assert!(full.values().len() == 8);
}

#[test]
fn damping_uses_wall_time() {
    let psi = StateVector::basis(8, 3).unwrap();
    let cfg = ExperimentConfig::preset(Preset::H1);
    let machine = cfg.machine().unwrap();
    let s = Stepper::from_unitary(DenseOperator::identity(8), 1e-3, 2e-3).unwrap();
    let series = acquire(&psi, &s, 10, 1, Some(&machine)).unwrap();
    assert_eq!(series.values[0], 1.0);
    for (k, v) in series.values.iter().enumerate() {
        assert!((v - (-(k as f64) * 2e-3 / machine.t2()[0]).exp()).abs() < 1e-15);
        assert!((series.wall_times[k] - k as f64 * 2e-3).abs() < 1e-15);
    }
}

#[test]
fn dft_matches_direct_sum() {
    let x: Vec<f64> = (0..37).map(|k| ((k * k) % 11) as f64 / 5.0 - 1.0).collect();
    let sp = dft(&TimeSeries::new(1e-3, x.clone()).unwrap()).unwrap();
    for (a, b) in sp.amplitudes.iter().zip(direct_dft(&x)) {
        assert!((a - b).norm() < 1e-10);
    }
    assert!((sp.frequencies[18] - 2.0 * PI * 18.0 / 0.037).abs() < 1e-9);
    assert!((sp.frequencies[19] + 2.0 * PI * 18.0 / 0.037).abs() < 1e-9);
}

#[test]
fn equal_peaks_pick_lower_frequency() {
    let x: Vec<f64> = (0..400)
        .map(|k| {
            let t = k as f64 * 1e-3;
            (2.0 * PI * 60.0 * t).cos() + (2.0 * PI * 120.0 * t).cos()
        })
        .collect();
    let (w, _) = peak_pick(&dft(&TimeSeries::new(1e-3, x).unwrap()).unwrap(), true).unwrap();
    assert!((w - 2.0 * PI * 60.0).abs() < 1e-9);
}

#[test]
fn fit_recovers_generator() {
    let x = generator(0.8, 0.2, 2.0 * PI * 100.0, 0.3, 1e-3, 400);
    let fit = fit_damped_sinusoid(&TimeSeries::new(1e-3, x).unwrap(), 2.0 * PI * 100.0).unwrap();
    let rel = |a: f64, b: f64| (a - b).abs() / b;
    assert!(fit.converged);
    assert!(rel(fit.amplitude, 0.8) < 1e-6);
    assert!(rel(fit.tau_e, 0.2) < 1e-6);
    assert!(rel(fit.delta_exp, 2.0 * PI * 100.0) < 1e-6);
    assert!(rel(fit.phase, 0.3) < 1e-6);
    assert!(fit.residual_history.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn fit_of_undamped_cosine() {
    let w = 2.0 * PI * 83.7;
    let x = generator(0.6, f64::INFINITY, w, -1.1, 1e-3, 400);
    let series = TimeSeries::new(1e-3, x).unwrap();
    let seed = peak_pick(&dft(&series).unwrap(), true).unwrap().0;
    let fit = fit_damped_sinusoid(&series, seed).unwrap();
    assert!(fit.converged);
    assert!((fit.delta_exp - w).abs() / w < 1e-6);
    assert!(fit.tau_e >= 10.0 * 400.0 * 1e-3);
}

#[test]
fn fit_is_robust_to_bounded_noise() {
    let (t0, q) = (1e-3, 400);
    let w = 2.0 * PI * 100.0;
    let bin = 2.0 * PI / (q as f64 * t0);
    let clean = generator(0.8, 0.2, w, 0.3, t0, q);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for eta in [0.001, 0.01] {
        for _ in 0..100 {
            let noisy: Vec<f64> = clean.iter().map(|v| v + rng.gen_range(-eta..=eta)).collect();
            let series = TimeSeries::new(t0, noisy).unwrap();
            let seed = peak_pick(&dft(&series).unwrap(), true).unwrap().0;
            let fit = fit_damped_sinusoid(&series, seed).unwrap();
            assert!((fit.delta_exp - w).abs() <= 5.0 * eta * bin, "eta {eta}: {}", fit.delta_exp - w);
        }
    }
}

fn series_strategy() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-1.0f64..1.0, 2..200)
}

proptest! {
    #[test]
    fn parseval(x in series_strategy()) {
        let sp = dft(&TimeSeries::new(1e-3, x.clone()).unwrap()).unwrap();
        let lhs: f64 = x.iter().map(|v| v * v).sum();
        let rhs = sp.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>() / x.len() as f64;
        prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs.max(1e-300));
    }

    #[test]
    fn dft_round_trip_and_conjugate_symmetry(x in series_strategy()) {
        let q = x.len();
        let sp = dft(&TimeSeries::new(1e-3, x.clone()).unwrap()).unwrap();
        for (a, b) in idft(&sp).iter().zip(&x) {
            prop_assert!((a - Complex64::new(*b, 0.0)).norm() < 1e-10);
        }
        for j in 1..q {
            prop_assert!((sp.amplitudes[j] - sp.amplitudes[q - j].conj()).norm() < 1e-10);
        }
    }

    #[test]
    fn epsilon_ft_scale_invariance(q in 1usize..10_000, t0 in 1e-6f64..1.0) {
        let a = epsilon_ft(q, t0).unwrap();
        let b = epsilon_ft(2 * q, t0 / 2.0).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a);
    }

    #[test]
    fn fit_residual_never_increases(
        a in 0.2f64..1.0, tau in 0.05f64..1.0, f in 20.0f64..180.0, phi in -3.0f64..3.0, detune in -2.0f64..2.0
    ) {
        let x = generator(a, tau, 2.0 * PI * f, phi, 1e-3, 400);
        let fit = fit_damped_sinusoid(&TimeSeries::new(1e-3, x).unwrap(), 2.0 * PI * (f + detune)).unwrap();
        prop_assert!(fit.residual_history.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(fit.delta_exp >= 0.0);
        prop_assert!(!fit.converged || fit.tau_e > 0.0);
    }
}
