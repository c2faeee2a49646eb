//! Gate-count and coherence-time feasibility estimates for simulating a
//! pairing model on `n` qubits.

use std::fmt::Write as _;

use crate::error::{param, Result};

/// `3 n^4 delta / epsilon`.
pub fn wbl_gate_count(n: usize, delta: f64, epsilon: f64) -> Result<f64> {
    if n == 0 {
        return Err(param("n must be at least 1"));
    }
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(param("epsilon must be positive"));
    }
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(param("delta must be non-negative"));
    }
    Ok(3.0 * (n as f64).powi(4) * delta / epsilon)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Feasibility {
    pub feasible: bool,
    /// Total gate time in units of the coherence time.
    pub time_in_tau: f64,
}

pub fn feasible(
    n: usize,
    delta: f64,
    epsilon: f64,
    gate_time_over_tau: f64,
    budget_in_tau: f64,
) -> Result<Feasibility> {
    if !(gate_time_over_tau > 0.0 && budget_in_tau > 0.0) {
        return Err(param("gate time and budget must be positive"));
    }
    let time_in_tau = wbl_gate_count(n, delta, epsilon)? * gate_time_over_tau;
    Ok(Feasibility { feasible: time_in_tau <= budget_in_tau, time_in_tau })
}

/// Dimensionless scaling score `n^d / eps^r`.
pub fn precision_cost(n: usize, d: f64, eps_rel: f64, r: f64) -> Result<f64> {
    if n == 0 || !(d > 0.0) {
        return Err(param("n and d must be positive"));
    }
    if !(eps_rel.is_finite() && eps_rel > 0.0) {
        return Err(param("epsilon must be positive"));
    }
    if !(r.is_finite() && r >= 1.0) {
        return Err(param("exponent r must be at least 1"));
    }
    Ok((n as f64).powf(d) / eps_rel.powf(r))
}

/// Largest feasible `n`, found by scanning upwards; 0 when even `n = 1` is
/// out of budget.
pub fn max_feasible_n(
    delta: f64,
    epsilon: f64,
    gate_time_over_tau: f64,
    budget_in_tau: f64,
) -> Result<usize> {
    if !(delta > 0.0) {
        return Err(param("delta must be positive"));
    }
    let mut n = 0;
    while feasible(n + 1, delta, epsilon, gate_time_over_tau, budget_in_tau)?.feasible {
        n += 1;
    }
    Ok(n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateRow {
    pub n: usize,
    pub eps_over_delta: f64,
    pub gates: f64,
    pub time_in_tau: f64,
    pub feasible: bool,
}

/// Grid over `n` and `epsilon / delta`.
pub fn estimate_table(
    ns: &[usize],
    eps_over_delta: &[f64],
    gate_time_over_tau: f64,
    budget_in_tau: f64,
) -> Result<Vec<EstimateRow>> {
    if ns.is_empty() || eps_over_delta.is_empty() {
        return Err(param("estimate grid is empty"));
    }
    let mut rows = Vec::with_capacity(ns.len() * eps_over_delta.len());
    for &n in ns {
        for &e in eps_over_delta {
            let f = feasible(n, 1.0, e, gate_time_over_tau, budget_in_tau)?;
            rows.push(EstimateRow {
                n,
                eps_over_delta: e,
                gates: wbl_gate_count(n, 1.0, e)?,
                time_in_tau: f.time_in_tau,
                feasible: f.feasible,
            });
        }
    }
    Ok(rows)
}

pub fn estimate_csv(rows: &[EstimateRow]) -> String {
    let mut out = String::from("n,eps_over_delta,gates,time_in_tau,feasible\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{},{}", r.n, r.eps_over_delta, r.gates, r.time_in_tau, r.feasible);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-9 * b.abs().max(1.0)
    }

    #[test]
    fn gate_counts() {
        assert!(close(wbl_gate_count(10, 1.0, 1.0).unwrap(), 30_000.0));
        assert!(close(wbl_gate_count(3, 1.0, 0.01).unwrap(), 24_300.0));
        assert!(close(wbl_gate_count(1, 5.0, 5.0).unwrap(), 3.0));
        assert!(wbl_gate_count(0, 1.0, 1.0).is_err());
        assert!(wbl_gate_count(2, 1.0, 0.0).is_err());
    }

    #[test]
    fn feasibility_boundary() {
        let f4 = feasible(4, 1.0, 0.01, 1e-5, 1.0).unwrap();
        assert!(f4.feasible && close(f4.time_in_tau, 0.768));
        let f5 = feasible(5, 1.0, 0.01, 1e-5, 1.0).unwrap();
        assert!(!f5.feasible && close(f5.time_in_tau, 1.875));
        let f10 = feasible(10, 1.0, 1.0, 1e-5, 1.0).unwrap();
        assert!(f10.feasible && close(f10.time_in_tau, 0.3));
    }

    #[test]
    fn precision_costs() {
        let base = precision_cost(10, 2.0, 0.1, 1.0).unwrap();
        assert!(close(precision_cost(10, 2.0, 0.05, 1.0).unwrap(), 2.0 * base));
        let r1 = precision_cost(3, 4.0, 0.01, 1.0).unwrap();
        assert!(close(precision_cost(3, 4.0, 0.01, 2.0).unwrap() / r1, 100.0));
        assert!(close(precision_cost(6, 4.0, 0.01, 1.0).unwrap() / r1, 16.0));
        assert!(precision_cost(3, 4.0, 0.01, 0.5).is_err());
    }

    #[test]
    fn max_n() {
        assert_eq!(max_feasible_n(1.0, 0.01, 1e-5, 1.0).unwrap(), 4);
        assert_eq!(max_feasible_n(1.0, 1.0, 1e-5, 1.0).unwrap(), 13);
        assert_eq!(max_feasible_n(1.0, 1e-9, 1e-5, 1.0).unwrap(), 0);
    }

    #[test]
    fn table_csv() {
        let rows = estimate_table(&[2, 10], &[1.0, 0.1], 1e-5, 1.0).unwrap();
        assert_eq!(rows.len(), 4);
        let csv = estimate_csv(&rows);
        assert!(csv.starts_with("n,eps_over_delta,gates,time_in_tau,feasible\n"));
        assert_eq!(csv.lines().count(), 5);
        assert!(estimate_table(&[], &[1.0], 1e-5, 1.0).is_err());
    }
}
