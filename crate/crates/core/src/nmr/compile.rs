//! Compilers from pairing-model propagators to pulse programs.

use std::collections::BTreeSet;
use std::f64::consts::{FRAC_PI_2, PI};

use super::program::{PulseEvent, PulseProgram};
use super::SpinSystem;
use crate::error::{param, Error, Result};
use crate::hamiltonian::PairingModel;
use crate::trotter::TrotterPlan;

/// Uncompensated (W1) or delay-compensated (W2) compilation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    W1,
    W2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingAxis {
    XX,
    YY,
}

impl CouplingAxis {
    /// (opening, closing) rotations as (phase, angle). The opening pulse maps
    /// the target axis onto z, the closing pulse maps it back.
    fn sandwich(self) -> ((f64, f64), (f64, f64)) {
        match self {
            CouplingAxis::XX => ((FRAC_PI_2, FRAC_PI_2), (-FRAC_PI_2, FRAC_PI_2)),
            CouplingAxis::YY => ((PI, FRAC_PI_2), (0.0, FRAC_PI_2)),
        }
    }
}

fn check_register(model: &PairingModel, machine: &SpinSystem) -> Result<()> {
    if model.n_modes() != machine.n_spins() {
        return Err(param(format!(
            "model has {} modes but the machine has {} spins",
            model.n_modes(),
            machine.n_spins()
        )));
    }
    Ok(())
}

/// Maps an angle into (-pi, pi]; equal to the input rotation up to a sign,
/// which is a per-spin global phase.
fn shortest_angle(a: f64) -> f64 {
    let r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// `U_0(t) = exp(-i H_0 t)` as composite z rotations
/// `R_{pi/2}(pi/2) R_0(nu_m t) R_{-pi/2}(pi/2)` on every spin.
pub fn compile_u0(model: &PairingModel, t: f64, machine: &SpinSystem) -> Result<PulseProgram> {
    check_register(model, machine)?;
    if !(t.is_finite() && t >= 0.0) {
        return Err(param(format!("evolution time {t} must be non-negative")));
    }
    let n = model.n_modes();
    let all: Vec<usize> = (1..=n).collect();
    let mut program = PulseProgram::empty(machine.t_pi());
    program.push(PulseEvent::rf(&all, -FRAC_PI_2, FRAC_PI_2)?);

    // spins sharing a middle angle are pulsed together
    let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
    for m in 0..n {
        let angle = shortest_angle(model.effective_nu(m) * t);
        match groups.iter_mut().find(|(a, _)| *a == angle) {
            Some((_, spins)) => spins.push(m + 1),
            None => groups.push((angle, vec![m + 1])),
        }
    }
    for (angle, spins) in groups {
        program.push(PulseEvent::rf(&spins, 0.0, angle)?);
    }

    program.push(PulseEvent::rf(&all, FRAC_PI_2, FRAC_PI_2)?);
    Ok(program)
}

/// `exp(-i t sum (V_ml/2) P_m P_l)` for `P` = X or Y over the `targets` mode
/// pairs (0-based, any order), generated by one scalar-coupling delay between
/// basis-changing pulses. Spins coupled to the targets but not part of them
/// are decoupled by a pi pulse at the delay midpoint, undone after the
/// closing rotation.
pub fn compile_uxxyy(
    model: &PairingModel,
    axis: CouplingAxis,
    t: f64,
    targets: &[(usize, usize)],
    machine: &SpinSystem,
) -> Result<PulseProgram> {
    check_register(model, machine)?;
    if !(t.is_finite() && t >= 0.0) {
        return Err(param(format!("evolution time {t} must be non-negative")));
    }
    let n = model.n_modes();
    let pairs: BTreeSet<(usize, usize)> = targets
        .iter()
        .map(|&(a, b)| if a < b { (a, b) } else { (b, a) })
        .collect();
    if pairs.is_empty() {
        return Ok(PulseProgram::empty(machine.t_pi()));
    }

    let mut coupled = BTreeSet::new();
    for &(m, l) in &pairs {
        if m == l || l >= n {
            return Err(param(format!("invalid target pair ({}, {})", m + 1, l + 1)));
        }
        if model.coupling()[m][l] == 0.0 {
            return Err(param(format!(
                "target pair ({}, {}) has zero coupling in the model",
                m + 1,
                l + 1
            )));
        }
        coupled.insert(m);
        coupled.insert(l);
    }

    // every coupled pair must accrue its angle in one common delay
    let mut delay: Option<(f64, (usize, usize))> = None;
    for &i in &coupled {
        for &k in coupled.range(i + 1..) {
            let j = machine.j(i, k);
            let wanted = pairs.contains(&(i, k));
            if !wanted {
                if j != 0.0 {
                    return Err(Error::UnrealizableCoupling(format!(
                        "spins {} and {} are coupled (J = {j} Hz) but the pair is not requested",
                        i + 1,
                        k + 1
                    )));
                }
                continue;
            }
            if j == 0.0 {
                return Err(Error::UnrealizableCoupling(format!(
                    "spins {} and {} have no scalar coupling",
                    i + 1,
                    k + 1
                )));
            }
            // (pi/2) J d = (V/2) t
            let d = model.effective_coupling(i, k) * t / (PI * j);
            match delay {
                None => delay = Some((d, (i, k))),
                Some((d0, (a, b))) => {
                    if (d - d0).abs() > 1e-9 * d.abs().max(d0.abs()).max(1e-300) {
                        return Err(Error::UnrealizableCoupling(format!(
                            "pair ({}, {}) needs delay {d0} s but pair ({}, {}) needs {d} s",
                            a + 1,
                            b + 1,
                            i + 1,
                            k + 1
                        )));
                    }
                }
            }
        }
    }
    let d = delay.map(|(d, _)| d).unwrap_or(0.0);
    if d < 0.0 {
        return Err(Error::Compile(format!(
            "required coupling delay is negative ({d} s): V and J have opposite signs"
        )));
    }

    let spectators: Vec<usize> = (0..n)
        .filter(|s| !coupled.contains(s))
        .filter(|&s| coupled.iter().any(|&c| machine.j(s, c) != 0.0))
        .collect();
    for (a, &s) in spectators.iter().enumerate() {
        for &r in &spectators[a + 1..] {
            if machine.j(s, r) != 0.0 {
                return Err(Error::UnrealizableCoupling(format!(
                    "spectator spins {} and {} are mutually coupled and cannot share one echo",
                    s + 1,
                    r + 1
                )));
            }
        }
    }

    let coupled_spins: Vec<usize> = coupled.iter().map(|c| c + 1).collect();
    let spectator_spins: Vec<usize> = spectators.iter().map(|s| s + 1).collect();
    let ((open_phase, open_angle), (close_phase, close_angle)) = axis.sandwich();

    let mut program = PulseProgram::empty(machine.t_pi());
    program.push(PulseEvent::rf(&coupled_spins, open_phase, open_angle)?);
    if spectator_spins.is_empty() {
        program.push(PulseEvent::delay(d)?);
        program.push(PulseEvent::rf(&coupled_spins, close_phase, close_angle)?);
    } else {
        program.push(PulseEvent::delay(d / 2.0)?);
        program.push(PulseEvent::rf(&spectator_spins, 0.0, PI)?);
        program.push(PulseEvent::delay(d / 2.0)?);
        program.push(PulseEvent::rf(&coupled_spins, close_phase, close_angle)?);
        // R_pi(pi) R_0(pi) = I returns the spectators to their initial state
        program.push(PulseEvent::rf(&spectator_spins, PI, PI)?);
    }
    Ok(program)
}

/// W2 post-processing: each delay flanked by pulses of angles theta1, theta2
/// is shortened by `t_pi (|theta1| + |theta2|) / (2 pi)`, clamped at zero.
pub fn apply_delay_compensation(program: &PulseProgram) -> PulseProgram {
    let t_pi = program.t_pi();
    let src = program.events().to_vec();
    let flank = |idx: Option<usize>| -> f64 {
        match idx.and_then(|i| src.get(i)) {
            Some(PulseEvent::Rf { angle, ideal: false, .. }) => angle.abs(),
            _ => 0.0,
        }
    };
    let mut out = program.clone();
    let mut clamps = Vec::new();
    for (i, event) in out.events_mut().iter_mut().enumerate() {
        if let PulseEvent::Delay { duration } = event {
            let alpha = t_pi / (2.0 * PI) * (flank(i.checked_sub(1)) + flank(Some(i + 1)));
            let reduced = *duration - alpha;
            if reduced < 0.0 {
                clamps.push(format!(
                    "W2 clamp: delay {} at event {i} shorter than compensation {alpha}",
                    *duration
                ));
            }
            *duration = reduced.max(0.0);
        }
    }
    for c in clamps {
        out.warn(c);
    }
    out
}

/// One WBL3 step `[U0(a) Uxx(a) Uyy(2a) Uxx(a) U0(a)]^k`, `a = t0/(2k)`, as a
/// pulse program for the given machine.
pub fn compile_wbl_step(
    model: &PairingModel,
    plan: &TrotterPlan,
    method: Method,
    machine: &SpinSystem,
) -> Result<PulseProgram> {
    let a = plan.t0() / (2.0 * plan.k() as f64);
    let pairs = model.coupled_pairs();
    let u0 = compile_u0(model, a, machine)?;
    let uxx = compile_uxxyy(model, CouplingAxis::XX, a, &pairs, machine)?;
    let uyy = compile_uxxyy(model, CouplingAxis::YY, 2.0 * a, &pairs, machine)?;

    let mut program = PulseProgram::empty(machine.t_pi());
    for _ in 0..plan.k() {
        program.extend(u0.clone());
        program.extend(uxx.clone());
        program.extend(uyy.clone());
        program.extend(uxx.clone());
        program.extend(u0.clone());
    }
    Ok(match method {
        Method::W1 => program,
        Method::W2 => apply_delay_compensation(&program),
    })
}
