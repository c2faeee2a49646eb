use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::program::{PulseEvent, PulseProgram};
use super::SpinSystem;
use crate::error::{param, Error, Result};
use crate::exact::eigendecompose;
use crate::operator::{DenseOperator, StateVector, C0};

/// How RF events are propagated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PulseMode {
    /// Instantaneous, perfect rotations.
    Delta,
    /// Rectangular on-resonance pulses of duration `t_pi |theta| / pi` during
    /// which the scalar coupling keeps acting.
    Finite,
}

/// Perfect `prod_q R^q_phase(angle)` on an `n`-spin register.
pub fn rf_rotation(n: usize, targets: &[usize], phase: f64, angle: f64) -> Result<DenseOperator> {
    if targets.iter().any(|&q| q == 0 || q > n) {
        return Err(param(format!("RF target outside spins 1..={n}")));
    }
    // exp(i a/2 (X cos p + Y sin p)) = cos(a/2) I + i sin(a/2) (X cos p + Y sin p)
    let c = Complex64::new((angle / 2.0).cos(), 0.0);
    let s = (angle / 2.0).sin();
    let off_lower = Complex64::new(0.0, s) * Complex64::from_polar(1.0, phase); // <1|.|0>
    let off_upper = Complex64::new(0.0, s) * Complex64::from_polar(1.0, -phase); // <0|.|1>
    let dim = 1usize << n;
    let mut u = DMatrix::<Complex64>::identity(dim, dim);
    for &q in targets {
        let shift = n - q;
        let mut next = DMatrix::from_element(dim, dim, C0);
        for col in 0..dim {
            for row in 0..dim {
                let v = u[(row, col)];
                if v == C0 {
                    continue;
                }
                let bit = (row >> shift) & 1;
                let flipped = row ^ (1 << shift);
                next[(row, col)] += c * v;
                next[(flipped, col)] += if bit == 0 { off_lower } else { off_upper } * v;
            }
        }
        u = next;
    }
    DenseOperator::from_matrix(u)
}

/// Finite rectangular pulse: `exp(-i (H_rf + H_ZZ) d)` with the RF amplitude
/// calibrated so that the J = 0 evolution equals `R_phase(angle)`.
fn finite_pulse(
    n: usize,
    zz: &DenseOperator,
    targets: &[usize],
    phase: f64,
    angle: f64,
    duration: f64,
) -> Result<DenseOperator> {
    let dim = 1usize << n;
    // H_rf = -(theta / 2d) sum (X cos p + Y sin p)
    let amp = -angle / (2.0 * duration);
    let mut h = zz.matrix().clone();
    for &q in targets {
        let shift = n - q;
        for col in 0..dim {
            let row = col ^ (1 << shift);
            let bit = (col >> shift) & 1;
            // (X cos p + Y sin p)|0> = e^{ip}|1>, |1> -> e^{-ip}|0>
            let sign = if bit == 0 { phase } else { -phase };
            h[(row, col)] += Complex64::from_polar(amp, sign);
        }
    }
    let h = DenseOperator::from_matrix(h)?;
    Ok(eigendecompose(&h)?.propagator(duration))
}

fn zz_delay(zz_diag: &[f64], duration: f64) -> DenseOperator {
    let d: Vec<Complex64> = zz_diag.iter().map(|&e| Complex64::from_polar(1.0, -e * duration)).collect();
    DenseOperator::from_diagonal(&d)
}

/// Unitary of the whole program on `machine`. Pulse durations use the
/// machine's `t_pi`.
pub fn program_unitary(
    program: &PulseProgram,
    machine: &SpinSystem,
    mode: PulseMode,
) -> Result<DenseOperator> {
    let n = machine.n_spins();
    let dim = 1usize << n;
    let zz = machine.zz_hamiltonian()?;
    let zz_diag: Vec<f64> = (0..dim).map(|i| zz.get(i, i).re).collect();
    let mut u = DenseOperator::identity(dim);
    for event in program.events() {
        let step = match event {
            PulseEvent::Delay { duration } => zz_delay(&zz_diag, *duration),
            PulseEvent::Rf { targets, phase, angle, ideal } => {
                let duration = if *ideal { 0.0 } else { machine.t_pi() * angle.abs() / PI };
                if mode == PulseMode::Delta || duration == 0.0 {
                    rf_rotation(n, targets, *phase, *angle)?
                } else {
                    if targets.iter().any(|&q| q > n) {
                        return Err(param(format!("RF target outside spins 1..={n}")));
                    }
                    finite_pulse(n, &zz, targets, *phase, *angle, duration)?
                }
            }
        };
        u = &step * &u;
    }
    Ok(u)
}

/// Runs the program on `init`; returns the final state and the program's
/// physical duration.
pub fn simulate_program(
    program: &PulseProgram,
    machine: &SpinSystem,
    init: &StateVector,
    mode: PulseMode,
) -> Result<(StateVector, f64)> {
    if init.dim() != 1 << machine.n_spins() {
        return Err(Error::Contract(format!(
            "state of dimension {} on a {}-spin machine",
            init.dim(),
            machine.n_spins()
        )));
    }
    let u = program_unitary(program, machine, mode)?;
    Ok((u.apply(init)?, program.wall_time_with(machine.t_pi())))
}

