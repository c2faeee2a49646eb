//! Product-formula approximations of the pairing-model propagator.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{param, Error, Result};
use crate::exact::{eigendecompose, EigenSystem};
use crate::hamiltonian::{build_hamiltonian, HamiltonianPart, PairingModel};
use crate::nmr::{compile_wbl_step, program_unitary, Method, PulseMode, SpinSystem};
use crate::operator::DenseOperator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TrotterOrder {
    /// `(prod_j exp(-i H_j t/k))^k`.
    First,
    /// `[U0(t/2k) Uxx(t/2k) Uyy(t/k) Uxx(t/2k) U0(t/2k)]^k`.
    Wbl3,
}

/// Simulated step `t0` (s) split into `k` inner repetitions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrotterPlan {
    t0: f64,
    k: usize,
    order: TrotterOrder,
}

impl TrotterPlan {
    pub fn new(t0: f64, k: usize, order: TrotterOrder) -> Result<Self> {
        if !(t0.is_finite() && t0 > 0.0) {
            return Err(param(format!("t0 = {t0} must be positive")));
        }
        if k == 0 {
            return Err(param("k must be at least 1"));
        }
        Ok(Self { t0, k, order })
    }

    pub fn wbl3(t0: f64, k: usize) -> Result<Self> {
        Self::new(t0, k, TrotterOrder::Wbl3)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn order(&self) -> TrotterOrder {
        self.order
    }

    pub fn with_t0(&self, t0: f64) -> Result<Self> {
        Self::new(t0, self.k, self.order)
    }
}

/// How the factors of a Trotter step are implemented.
#[derive(Debug, Clone, PartialEq)]
pub enum Realizer {
    /// Exact exponentials of `H0`, `Hxx`, `Hyy`.
    Ideal,
    /// Compiled pulse programs simulated on a spin system.
    Nmr { method: Method, machine: SpinSystem, mode: PulseMode },
}

/// `(prod_j exp(-i H_j t/k))^k`.
pub fn first_order_step(parts: &[DenseOperator], t: f64, k: usize) -> Result<DenseOperator> {
    let first = parts.first().ok_or_else(|| param("first-order step needs at least one part"))?;
    if k == 0 {
        return Err(param("k must be at least 1"));
    }
    let dim = first.dim();
    if parts.iter().any(|p| p.dim() != dim) {
        return Err(Error::Contract("Trotter parts have different dimensions".into()));
    }
    let mut step = DenseOperator::identity(dim);
    for h in parts {
        // the product is written left to right, so later factors act first
        step = &step * &eigendecompose(h)?.propagator(t / k as f64);
    }
    Ok(step.pow(k))
}

struct Parts {
    h0: EigenSystem,
    hxx: EigenSystem,
    hyy: EigenSystem,
}

impl Parts {
    fn new(model: &PairingModel) -> Result<Self> {
        let eig = |p| -> Result<EigenSystem> {
            eigendecompose(&build_hamiltonian(model, p)?.realize()?)
        };
        Ok(Self {
            h0: eig(HamiltonianPart::H0)?,
            hxx: eig(HamiltonianPart::Hxx)?,
            hyy: eig(HamiltonianPart::Hyy)?,
        })
    }

    fn wbl3(&self, t0: f64, k: usize) -> DenseOperator {
        let a = t0 / (2.0 * k as f64);
        let u0 = self.h0.propagator(a);
        let uxx = self.hxx.propagator(a);
        let uyy = self.hyy.propagator(2.0 * a);
        let step = &(&(&(&u0 * &uxx) * &uyy) * &uxx) * &u0;
        step.pow(k)
    }
}

/// One step `V(t0)` of the chosen order, realized ideally or via pulses.
pub fn wbl_step(model: &PairingModel, plan: &TrotterPlan, realizer: &Realizer) -> Result<DenseOperator> {
    match (realizer, plan.order()) {
        (Realizer::Ideal, TrotterOrder::Wbl3) => Ok(Parts::new(model)?.wbl3(plan.t0(), plan.k())),
        (Realizer::Ideal, TrotterOrder::First) => {
            let parts = [HamiltonianPart::H0, HamiltonianPart::Hxx, HamiltonianPart::Hyy]
                .into_iter()
                .map(|p| build_hamiltonian(model, p)?.realize())
                .collect::<Result<Vec<_>>>()?;
            first_order_step(&parts, plan.t0(), plan.k())
        }
        (Realizer::Nmr { method, machine, mode }, TrotterOrder::Wbl3) => {
            let program = compile_wbl_step(model, plan, *method, machine)?;
            program_unitary(&program, machine, *mode)
        }
        (Realizer::Nmr { .. }, TrotterOrder::First) => Err(param(
            "pulse compilation is only defined for the WBL3 step",
        )),
    }
}

/// Spectral norm `||U - V||_2`; does not quotient out a global phase.
pub fn trotter_error(exact: &DenseOperator, approx: &DenseOperator) -> Result<f64> {
    if exact.dim() != approx.dim() {
        return Err(Error::Contract("Trotter error of operators with different dimensions".into()));
    }
    Ok((exact - approx).spectral_norm())
}

/// Errors below this are treated as numerical noise and left out of fits.
pub const ERROR_FLOOR: f64 = 1e-12;

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(param("a scaling fit needs at least two positive points"));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(param("a scaling fit needs at least two distinct abscissae"));
    }
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub t0: f64,
    pub k: usize,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceSweep {
    pub rows: Vec<SweepRow>,
    /// Exponent `p` of `error ~ t0^p` at `k = k_list[0]`.
    pub t0_exponent: Option<f64>,
    /// Exponent `q` of `error ~ k^-q` at `t0 = t0_list[0]`.
    pub k_exponent: Option<f64>,
}

impl ConvergenceSweep {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t0_s,k,error\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{}", r.t0, r.k, r.error);
        }
        out
    }
}

/// Trotter error over the `t0_list x k_list` grid, rows in input order.
pub fn convergence_sweep(
    model: &PairingModel,
    t0_list: &[f64],
    k_list: &[usize],
    order: TrotterOrder,
    realizer: &Realizer,
) -> Result<ConvergenceSweep> {
    if t0_list.is_empty() || k_list.is_empty() {
        return Err(param("convergence sweep needs non-empty t0 and k lists"));
    }
    if t0_list.len() < 2 && k_list.len() < 2 {
        return Err(param("convergence sweep needs at least two points along some axis"));
    }
    let full = eigendecompose(&build_hamiltonian(model, HamiltonianPart::Full)?.realize()?)?;
    let grid: Vec<(f64, usize)> = t0_list
        .iter()
        .flat_map(|&t0| k_list.iter().map(move |&k| (t0, k)))
        .collect();
    let rows = grid
        .par_iter()
        .map(|&(t0, k)| {
            let plan = TrotterPlan::new(t0, k, order)?;
            let v = wbl_step(model, &plan, realizer)?;
            Ok(SweepRow { t0, k, error: trotter_error(&full.propagator(t0), &v)? })
        })
        .collect::<Result<Vec<_>>>()?;

    let fit = |sel: &dyn Fn(&SweepRow) -> bool, x: &dyn Fn(&SweepRow) -> f64| -> Option<f64> {
        let pts: Vec<&SweepRow> = rows.iter().filter(|r| sel(r) && r.error > ERROR_FLOOR).collect();
        let xs: Vec<f64> = pts.iter().map(|r| x(r)).collect();
        let ys: Vec<f64> = pts.iter().map(|r| r.error).collect();
        loglog_slope(&xs, &ys).ok()
    };
    let (k_fixed, t0_fixed) = (k_list[0], t0_list[0]);
    let t0_exponent = if t0_list.len() >= 2 {
        fit(&|r| r.k == k_fixed, &|r| r.t0)
    } else {
        None
    };
    let k_exponent = if k_list.len() >= 2 {
        fit(&|r| r.t0 == t0_fixed, &|r| r.k as f64).map(|s| -s)
    } else {
        None
    };
    Ok(ConvergenceSweep { rows, t0_exponent, k_exponent })
}
