//! Time-series acquisition, Fourier analysis and damped-sinusoid fitting.
//!
//! The prepared state is stepped `Q` times by a fixed unitary, the
//! single-spin `<Z_r>` is recorded after every step, and the gap is read off
//! the spectrum and refined by a four-parameter fit of
//! `A exp(-t/tau) cos(delta t + phi)`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{param, Error, Result};
use crate::exact::eigendecompose;
use crate::hamiltonian::{build_hamiltonian, HamiltonianPart, PairingModel};
use crate::nmr::{damping_factor, program_unitary, PulseMode, PulseProgram, SpinSystem};
use crate::operator::{DenseOperator, StateVector};
use crate::trotter::{wbl_step, Realizer, TrotterPlan};

/// Samples `<M(t_k)>` at `t_k = k t0`, `k = 0..Q-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub t0: f64,
    pub values: Vec<f64>,
    /// Physical time elapsed before each sample (s).
    pub wall_times: Vec<f64>,
}

impl TimeSeries {
    pub fn new(t0: f64, values: Vec<f64>) -> Result<Self> {
        let wall_times = (0..values.len()).map(|k| k as f64 * t0).collect();
        Self::with_wall_times(t0, values, wall_times)
    }

    pub fn with_wall_times(t0: f64, values: Vec<f64>, wall_times: Vec<f64>) -> Result<Self> {
        if !(t0.is_finite() && t0 > 0.0) {
            return Err(param(format!("t0 = {t0} must be positive")));
        }
        if values.len() < 2 {
            return Err(param("a time series needs at least two samples"));
        }
        if wall_times.len() != values.len() {
            return Err(param("wall_times and values differ in length"));
        }
        Ok(Self { t0, values, wall_times })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.t0
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,t_s,value,wall_s\n");
        for (k, (v, w)) in self.values.iter().zip(&self.wall_times).enumerate() {
            let _ = writeln!(out, "{k},{},{v},{w}", self.time(k));
        }
        out
    }
}

/// Per-step evolution used by [`acquire`].
#[derive(Debug, Clone)]
pub struct Stepper {
    unitary: DenseOperator,
    t0: f64,
    wall_per_step: f64,
}

impl Stepper {
    /// `t0` is the simulated time per step; `wall_per_step` the physical
    /// time it takes.
    pub fn from_unitary(unitary: DenseOperator, t0: f64, wall_per_step: f64) -> Result<Self> {
        if !(t0.is_finite() && t0 > 0.0) {
            return Err(param(format!("t0 = {t0} must be positive")));
        }
        if !(wall_per_step.is_finite() && wall_per_step >= 0.0) {
            return Err(param("wall time per step must be non-negative"));
        }
        Ok(Self { unitary, t0, wall_per_step })
    }

    /// Exact `exp(-i H_pair t0)`.
    pub fn exact(model: &PairingModel, t0: f64) -> Result<Self> {
        let h = build_hamiltonian(model, HamiltonianPart::Full)?.realize()?;
        Self::from_unitary(eigendecompose(&h)?.propagator(t0), t0, t0)
    }

    /// Ideal-control Trotter step; one step lasts `t0` of wall time.
    pub fn ideal(model: &PairingModel, plan: &TrotterPlan) -> Result<Self> {
        Self::from_unitary(wbl_step(model, plan, &Realizer::Ideal)?, plan.t0(), plan.t0())
    }

    /// A compiled pulse program, realizing `t0` of evolution, simulated on
    /// `machine`.
    pub fn pulses(
        program: &PulseProgram,
        t0: f64,
        machine: &SpinSystem,
        mode: PulseMode,
    ) -> Result<Self> {
        Self::from_unitary(
            program_unitary(program, machine, mode)?,
            t0,
            program.wall_time_with(machine.t_pi()),
        )
    }

    pub fn unitary(&self) -> &DenseOperator {
        &self.unitary
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn wall_per_step(&self) -> f64 {
        self.wall_per_step
    }
}

/// `<Z_r>` on basis probabilities, qubit 1 most significant.
fn z_expectation(state: &StateVector, n: usize, spin: usize) -> f64 {
    let shift = n - spin;
    state
        .probabilities()
        .iter()
        .enumerate()
        .map(|(i, p)| if (i >> shift) & 1 == 0 { *p } else { -*p })
        .sum()
}

/// Steps `prepared` `q` times, recording `<Z_spin>` before each step. With
/// `damping`, sample `k` is attenuated by the observed spin's
/// `exp(-k wall_per_step / T2)`.
pub fn acquire(
    prepared: &StateVector,
    stepper: &Stepper,
    q: usize,
    observed_spin: usize,
    damping: Option<&SpinSystem>,
) -> Result<TimeSeries> {
    if q < 2 {
        return Err(param("acquisition needs Q >= 2"));
    }
    let dim = prepared.dim();
    let n = dim.trailing_zeros() as usize;
    if dim != 1 << n || stepper.unitary.dim() != dim {
        return Err(Error::Contract("stepper and state dimensions disagree".into()));
    }
    if observed_spin == 0 || observed_spin > n {
        return Err(param(format!("observed spin {observed_spin} outside 1..={n}")));
    }
    let mut psi = prepared.clone();
    let mut values = Vec::with_capacity(q);
    let mut wall_times = Vec::with_capacity(q);
    for k in 0..q {
        let wall = k as f64 * stepper.wall_per_step;
        let mut v = z_expectation(&psi, n, observed_spin);
        if let Some(machine) = damping {
            v *= damping_factor(wall, machine, observed_spin)?;
        }
        values.push(v);
        wall_times.push(wall);
        if k + 1 < q {
            psi = stepper.unitary.apply(&psi)?;
        }
    }
    TimeSeries::with_wall_times(stepper.t0, values, wall_times)
}

/// Complex DFT bins with their angular frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// `omega_j` for bin `j`, with `j` folded into `(-Q/2, Q/2]`.
    pub frequencies: Vec<f64>,
    pub amplitudes: Vec<Complex64>,
    pub t0: f64,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn bin_width(&self) -> f64 {
        2.0 * PI / (self.len() as f64 * self.t0)
    }

    /// Rows sorted by frequency.
    pub fn to_csv(&self) -> String {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| self.frequencies[a].total_cmp(&self.frequencies[b]));
        let mut out = String::from("omega_rad_s,re,im,abs\n");
        for i in idx {
            let z = self.amplitudes[i];
            let _ = writeln!(out, "{},{},{},{}", self.frequencies[i], z.re, z.im, z.norm());
        }
        out
    }
}

fn folded_frequency(j: usize, q: usize, t0: f64) -> f64 {
    let signed = if 2 * j > q { j as f64 - q as f64 } else { j as f64 };
    2.0 * PI * signed / (q as f64 * t0)
}

/// `X_j = sum_k x_k exp(-2 pi i j k / Q)`.
pub fn dft(series: &TimeSeries) -> Result<Spectrum> {
    let q = series.len();
    if q < 2 {
        return Err(param("DFT needs Q >= 2"));
    }
    let mut buf: Vec<Complex64> = series.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(q).process(&mut buf);
    Ok(Spectrum {
        frequencies: (0..q).map(|j| folded_frequency(j, q, series.t0)).collect(),
        amplitudes: buf,
        t0: series.t0,
    })
}

/// Inverse of [`dft`], `x_k = (1/Q) sum_j X_j exp(2 pi i j k / Q)`.
pub fn idft(spectrum: &Spectrum) -> Vec<Complex64> {
    let q = spectrum.len();
    let mut buf = spectrum.amplitudes.clone();
    FftPlanner::new().plan_fft_inverse(q).process(&mut buf);
    let scale = 1.0 / q as f64;
    buf.iter().map(|z| z * scale).collect()
}

/// Largest-magnitude bin with non-negative frequency (strictly positive when
/// `exclude_dc`); ties go to the lower frequency.
pub fn peak_pick(spectrum: &Spectrum, exclude_dc: bool) -> Result<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    let mut idx: Vec<usize> = (0..spectrum.len())
        .filter(|&j| {
            let w = spectrum.frequencies[j];
            w > 0.0 || (!exclude_dc && w == 0.0)
        })
        .collect();
    idx.sort_by(|&a, &b| spectrum.frequencies[a].total_cmp(&spectrum.frequencies[b]));
    for j in idx {
        let mag = spectrum.amplitudes[j].norm();
        match best {
            Some((_, m)) if mag <= m * (1.0 + 1e-9) => {}
            _ => best = Some((spectrum.frequencies[j], mag)),
        }
    }
    match best {
        Some((w, m)) if m > 0.0 => Ok((w, m)),
        _ => Err(Error::NoPeak),
    }
}

/// Parameters of `A exp(-t/tau_e) cos(delta_exp t + phase)` after a fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub delta_exp: f64,
    /// Infinite when the best fit has no decay.
    pub tau_e: f64,
    pub amplitude: f64,
    pub phase: f64,
    pub residual_norm: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Residual norm after each accepted iteration, starting with the seed.
    pub residual_history: Vec<f64>,
}

#[derive(Serialize)]
struct FitRecord {
    delta_exp_rad_s: f64,
    delta_exp_over_2pi_hz: f64,
    tau_e_s: Option<f64>,
    amplitude: f64,
    phase_rad: f64,
    residual_norm: f64,
    converged: bool,
}

impl FitResult {
    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(FitRecord {
            delta_exp_rad_s: self.delta_exp,
            delta_exp_over_2pi_hz: self.delta_exp / (2.0 * PI),
            tau_e_s: self.tau_e.is_finite().then_some(self.tau_e),
            amplitude: self.amplitude,
            phase_rad: self.phase,
            residual_norm: self.residual_norm,
            converged: self.converged,
        })
        .expect("fit record is serializable")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("fit record is serializable")
    }
}

pub const FIT_MAX_ITERATIONS: usize = 200;
pub const FIT_STEP_TOL: f64 = 1e-10;

// parameters: amplitude, decay rate 1/tau, angular frequency, phase
type Params = Vector4<f64>;

fn sum_squares(series: &TimeSeries, p: &Params) -> f64 {
    series
        .values
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let t = series.time(k);
            let r = v - p[0] * (-p[1] * t).exp() * (p[2] * t + p[3]).cos();
            r * r
        })
        .sum()
}

fn normal_equations(series: &TimeSeries, p: &Params) -> (Matrix4<f64>, Vector4<f64>) {
    let mut jtj = Matrix4::zeros();
    let mut jtr = Vector4::zeros();
    for (k, v) in series.values.iter().enumerate() {
        let t = series.time(k);
        let e = (-p[1] * t).exp();
        let (s, c) = (p[2] * t + p[3]).sin_cos();
        let model = p[0] * e * c;
        let grad = Vector4::new(e * c, -t * model, -p[0] * e * t * s, -p[0] * e * s);
        jtj += grad * grad.transpose();
        jtr += grad * (v - model);
    }
    (jtj, jtr)
}

fn wrap_phase(phi: f64) -> f64 {
    let r = (phi + PI).rem_euclid(2.0 * PI) - PI;
    if r == -PI {
        PI
    } else {
        r
    }
}

/// Levenberg-Marquardt fit of a single exponentially damped cosine, seeded
/// at angular frequency `seed`.
pub fn fit_damped_sinusoid(series: &TimeSeries, seed: f64) -> Result<FitResult> {
    let q = series.len();
    if q < 8 {
        return Err(param("damped-sinusoid fit needs Q >= 8"));
    }
    if !seed.is_finite() {
        return Err(param("seed frequency must be finite"));
    }
    let mean = series.values.iter().sum::<f64>() / q as f64;
    let spread = series.values.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    if spread <= 1e-14 * mean.abs().max(1.0) {
        return Err(Error::Degenerate("series is flat".into()));
    }

    let duration = q as f64 * series.t0;
    // single-bin DFT at the seed frequency
    let bin: Complex64 = series
        .values
        .iter()
        .enumerate()
        .map(|(k, v)| Complex64::from_polar(*v, -seed * series.time(k)))
        .sum();
    let mut p = Params::new(2.0 * bin.norm() / q as f64, 1.0 / duration, seed, bin.arg());
    if p[0] == 0.0 {
        p[0] = spread;
    }
    let scales = Vector4::new(spread, 1.0 / duration, 1.0 / duration, 1.0);

    let mut ssr = sum_squares(series, &p);
    let mut history = vec![ssr.sqrt()];
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < FIT_MAX_ITERATIONS {
        iterations += 1;
        let (jtj, jtr) = normal_equations(series, &p);
        let mut accepted = false;
        while lambda < 1e20 {
            let mut a = jtj;
            for i in 0..4 {
                a[(i, i)] += lambda * jtj[(i, i)].max(1e-300);
            }
            let Some(step) = a.lu().solve(&jtr) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial = p + step;
            trial[1] = trial[1].max(0.0);
            let trial_ssr = sum_squares(series, &trial);
            if trial_ssr.is_finite() && trial_ssr <= ssr {
                let applied = trial - p;
                let small =
                    (0..4).all(|i| applied[i].abs() <= FIT_STEP_TOL * (trial[i].abs() + scales[i]));
                p = trial;
                ssr = trial_ssr;
                history.push(ssr.sqrt());
                lambda = (lambda / 10.0).max(1e-12);
                accepted = true;
                if small {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if converged {
            break;
        }
        if !accepted {
            // no descent direction left at machine precision
            converged = true;
            break;
        }
    }

    let (mut amp, mut phase, mut delta) = (p[0], p[3], p[2]);
    if delta < 0.0 {
        delta = -delta;
        phase = -phase;
    }
    if amp < 0.0 {
        amp = -amp;
        phase += PI;
    }
    Ok(FitResult {
        delta_exp: delta,
        tau_e: if p[1] > 0.0 { 1.0 / p[1] } else { f64::INFINITY },
        amplitude: amp,
        phase: wrap_phase(phase),
        residual_norm: ssr.sqrt(),
        converged,
        iterations,
        residual_history: history,
    })
}

/// Fourier-limited precision `2 pi / (Q t0)`.
pub fn epsilon_ft(q: usize, t0: f64) -> Result<f64> {
    if q == 0 || !(t0 > 0.0) {
        return Err(param("epsilon_ft needs Q >= 1 and t0 > 0"));
    }
    Ok(2.0 * PI / (q as f64 * t0))
}

/// `delta_exp - delta_exact`.
pub fn systematic_offset(delta_exp: f64, delta_exact: f64) -> f64 {
    delta_exp - delta_exact
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(f: impl Fn(f64) -> f64, t0: f64, q: usize) -> TimeSeries {
        TimeSeries::new(t0, (0..q).map(|k| f(k as f64 * t0)).collect()).unwrap()
    }

    #[test]
    fn epsilon_ft_parameter_sets() {
        let tau = 2.0 * PI;
        assert!((epsilon_ft(400, 1e-3).unwrap() - tau * 2.5).abs() < 1e-9);
        assert!((epsilon_ft(200, 2e-3).unwrap() - tau * 2.5).abs() < 1e-9);
        assert!((epsilon_ft(200, 0.5e-3).unwrap() - tau * 10.0).abs() < 1e-9);
        assert!(epsilon_ft(0, 1e-3).is_err());
    }

    #[test]
    fn offsets() {
        let tau = 2.0 * PI;
        assert_eq!(systematic_offset(3.0, 3.0), 0.0);
        assert!((systematic_offset(tau * 554.0, tau * 452.0) - tau * 102.0).abs() < 1e-9);
        assert!((systematic_offset(tau * 227.0, tau * 218.0) - tau * 9.0).abs() < 1e-9);
    }

    #[test]
    fn dft_of_constant_and_cosine() {
        let s = series(|_| 0.5, 1e-3, 16);
        let sp = dft(&s).unwrap();
        assert!((sp.amplitudes[0].re - 8.0).abs() < 1e-12);
        assert!(sp.amplitudes[1..].iter().all(|z| z.norm() < 1e-12));

        let s = series(|t| (2.0 * PI * 100.0 * t).cos(), 1e-3, 400);
        let sp = dft(&s).unwrap();
        let (w, _) = peak_pick(&sp, true).unwrap();
        assert!((w - 2.0 * PI * 100.0).abs() < 1e-9);
        assert!((sp.amplitudes[40].norm() - 200.0).abs() < 1e-9);
        assert!((sp.amplitudes[360].norm() - 200.0).abs() < 1e-9);
        assert!((sp.frequencies[360] + 2.0 * PI * 100.0).abs() < 1e-9);
        assert!((sp.bin_width() - 2.0 * PI * 2.5).abs() < 1e-12);
    }

    #[test]
    fn peak_pick_rules() {
        let s = series(|t| 3.0 + (2.0 * PI * 100.0 * t).cos(), 1e-3, 400);
        let sp = dft(&s).unwrap();
        assert_eq!(peak_pick(&sp, false).unwrap().0, 0.0);
        assert!((peak_pick(&sp, true).unwrap().0 - 2.0 * PI * 100.0).abs() < 1e-9);

        let s = series(|t| (2.0 * PI * 150.0 * t).cos() + (2.0 * PI * 50.0 * t).cos(), 1e-3, 400);
        let (w, _) = peak_pick(&dft(&s).unwrap(), true).unwrap();
        assert!((w - 2.0 * PI * 50.0).abs() < 1e-9);

        let zero = series(|_| 0.0, 1e-3, 16);
        assert!(matches!(peak_pick(&dft(&zero).unwrap(), true), Err(Error::NoPeak)));
    }

    #[test]
    fn fit_rejects_short_and_flat() {
        let short = series(|t| t.cos(), 1e-3, 7);
        assert!(fit_damped_sinusoid(&short, 1.0).is_err());
        let flat = series(|_| 0.25, 1e-3, 64);
        assert!(matches!(fit_damped_sinusoid(&flat, 10.0), Err(Error::Degenerate(_))));
    }

    #[test]
    fn fit_json_record_keys() {
        let s = series(|t| 0.8 * (-t / 0.2).exp() * (2.0 * PI * 100.0 * t + 0.3).cos(), 1e-3, 400);
        let fit = fit_damped_sinusoid(&s, 2.0 * PI * 100.0).unwrap();
        let v = fit.to_json_value();
        for key in [
            "delta_exp_rad_s",
            "delta_exp_over_2pi_hz",
            "tau_e_s",
            "amplitude",
            "phase_rad",
            "residual_norm",
            "converged",
        ] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
    }
}
