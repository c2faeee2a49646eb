//! Pulse-level model of an NMR realization of the pairing-model evolution.
//!
//! Spins evolve under the always-on scalar coupling
//! `H_ZZ = sum_{i<j} (pi/2) J_ij Z_i Z_j` (J in Hz). RF pulses implement
//! `R_phi(theta) = exp[+i theta/2 (X cos phi + Y sin phi)]`; in finite-width
//! mode the coupling keeps acting while a pulse is on, which is the control
//! error the compensated compilation (W2) corrects for.

mod compile;
mod program;
mod simulate;

pub use compile::{
    apply_delay_compensation, compile_u0, compile_uxxyy, compile_wbl_step, CouplingAxis, Method,
};
pub use program::{PulseEvent, PulseProgram};
pub use simulate::{program_unitary, rf_rotation, simulate_program, PulseMode};

use crate::error::{param, Result};
use crate::hamiltonian::build_nmr_zz;
use crate::operator::DenseOperator;

/// Default pi-pulse duration (s). Not a measured spectrometer value.
pub const DEFAULT_T_PI: f64 = 20e-6;

/// Default per-spin dephasing time (s). Not a measured value.
pub const DEFAULT_T2: f64 = 0.25;

/// Scalar couplings of 13C-labelled CHFBr2 in Hz, spins ordered (H, C, F).
pub const CHFBR2_J_HC: f64 = 224.0;
pub const CHFBR2_J_HF: f64 = 50.0;
pub const CHFBR2_J_CF: f64 = -311.0;

/// Physical description of the spin register.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinSystem {
    j_hz: Vec<Vec<f64>>,
    t_pi: f64,
    t2: Vec<f64>,
}

impl SpinSystem {
    pub fn new(j_hz: Vec<Vec<f64>>, t_pi: f64, t2: Vec<f64>) -> Result<Self> {
        let n = j_hz.len();
        // validates symmetry and the zero diagonal
        build_nmr_zz(&j_hz)?;
        if !(t_pi.is_finite() && t_pi >= 0.0) {
            return Err(param(format!("t_pi = {t_pi} must be finite and non-negative")));
        }
        if t2.len() != n {
            return Err(param(format!("expected {n} T2 values, got {}", t2.len())));
        }
        if t2.iter().any(|&t| !(t > 0.0)) {
            return Err(param("T2 values must be positive"));
        }
        Ok(Self { j_hz, t_pi, t2 })
    }

    /// CHFBr2 with spins 1, 2, 3 = H, C, F.
    pub fn chfbr2(t_pi: f64, t2: f64) -> Result<Self> {
        Self::new(
            vec![
                vec![0.0, CHFBR2_J_HC, CHFBR2_J_HF],
                vec![CHFBR2_J_HC, 0.0, CHFBR2_J_CF],
                vec![CHFBR2_J_HF, CHFBR2_J_CF, 0.0],
            ],
            t_pi,
            vec![t2; 3],
        )
    }

    pub fn n_spins(&self) -> usize {
        self.j_hz.len()
    }

    pub fn j_hz(&self) -> &[Vec<f64>] {
        &self.j_hz
    }

    /// Coupling between 0-based spins.
    pub fn j(&self, i: usize, k: usize) -> f64 {
        self.j_hz[i][k]
    }

    pub fn t_pi(&self) -> f64 {
        self.t_pi
    }

    pub fn t2(&self) -> &[f64] {
        &self.t2
    }

    pub fn with_t_pi(&self, t_pi: f64) -> Result<Self> {
        Self::new(self.j_hz.clone(), t_pi, self.t2.clone())
    }

    pub fn with_t2(&self, t2: Vec<f64>) -> Result<Self> {
        Self::new(self.j_hz.clone(), self.t_pi, t2)
    }

    /// Duration of an RF pulse of angle `theta`.
    pub fn pulse_duration(&self, theta: f64) -> f64 {
        self.t_pi * theta.abs() / std::f64::consts::PI
    }

    /// Realized `H_ZZ` in rad/s.
    pub fn zz_hamiltonian(&self) -> Result<DenseOperator> {
        build_nmr_zz(&self.j_hz)?.realize()
    }
}

/// Signal attenuation `exp(-wall_time / T2)` of the observed spin (1-based).
pub fn damping_factor(wall_time: f64, machine: &SpinSystem, observed_spin: usize) -> Result<f64> {
    if wall_time < 0.0 {
        return Err(param("wall time must be non-negative"));
    }
    let t2 = machine
        .t2
        .get(observed_spin.wrapping_sub(1))
        .ok_or_else(|| param(format!("spin {observed_spin} is not part of the machine")))?;
    Ok((-wall_time / t2).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn damping_values() {
        let m = SpinSystem::chfbr2(DEFAULT_T_PI, 0.25).unwrap();
        assert_eq!(damping_factor(0.0, &m, 1).unwrap(), 1.0);
        assert!((damping_factor(0.25, &m, 1).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
        let three = damping_factor(0.75, &m, 2).unwrap();
        assert!((three - 0.049787068).abs() < 1e-8);
        assert!(damping_factor(-1.0, &m, 1).is_err());
        assert!(damping_factor(1.0, &m, 4).is_err());
        assert!(damping_factor(1.0, &m, 0).is_err());
    }

    #[test]
    fn spin_system_validation() {
        assert!(SpinSystem::new(vec![vec![0.0, 1.0], vec![2.0, 0.0]], 1e-5, vec![1.0; 2]).is_err());
        assert!(SpinSystem::new(vec![vec![0.0; 2]; 2], -1.0, vec![1.0; 2]).is_err());
        assert!(SpinSystem::new(vec![vec![0.0; 2]; 2], 1e-5, vec![0.0; 2]).is_err());
        assert!(SpinSystem::new(vec![vec![0.0; 2]; 2], 1e-5, vec![1.0]).is_err());
    }
}
