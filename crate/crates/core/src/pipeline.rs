//! End-to-end gap estimation: prepare, step and measure, transform, fit.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::adiabatic::prepare_with_diagnostics;
use crate::config::{pulse_mode_name, ExperimentConfig};
use crate::error::{param, Error, Result};
use crate::exact::reachable_gap;
use crate::nmr::compile_wbl_step;
use crate::spectroscopy::{
    acquire, dft, epsilon_ft, fit_damped_sinusoid, peak_pick, systematic_offset, FitResult, Spectrum,
    Stepper, TimeSeries,
};
use crate::trotter::loglog_slope;

/// Flat summary of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub preset: Option<String>,
    pub method: String,
    pub pulse_mode: String,
    pub t0_s: f64,
    pub k: usize,
    pub q: usize,
    pub observed_spin: usize,
    pub damping: bool,
    pub exact_level: usize,
    pub delta_exact_rad_s: f64,
    pub delta_exact_over_2pi_hz: f64,
    pub delta_exp_rad_s: f64,
    pub delta_exp_over_2pi_hz: f64,
    pub epsilon_ft_rad_s: f64,
    pub epsilon_ft_over_2pi_hz: f64,
    pub systematic_offset_rad_s: f64,
    pub systematic_offset_over_2pi_hz: f64,
    pub fit_seed_rad_s: f64,
    pub tau_e_s: Option<f64>,
    pub amplitude: f64,
    pub phase_rad: f64,
    pub residual_norm: f64,
    pub converged: bool,
    pub wall_per_step_s: f64,
    pub acquisition_wall_s: f64,
    pub prep_min_gap_rad_s: f64,
    pub warnings: Vec<String>,
}

impl RunRecord {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("run record is serializable")
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub record: RunRecord,
    pub series: TimeSeries,
    pub spectrum: Spectrum,
    pub fit: FitResult,
}

impl RunOutput {
    /// Writes `series.csv`, `spectrum.csv`, `fit.json` and `run.json` into
    /// `dir`, each file replaced atomically.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let files = [
            ("series.csv", self.series.to_csv()),
            ("spectrum.csv", self.spectrum.to_csv()),
            ("fit.json", self.fit.to_json() + "\n"),
            ("run.json", self.record.to_json() + "\n"),
        ];
        files.iter().map(|(name, body)| write_atomic(&dir.join(name), body)).collect()
    }
}

pub fn write_atomic(path: &Path, body: &str) -> Result<PathBuf> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, body)?;
    fs::rename(&tmp, path)?;
    Ok(path.to_path_buf())
}

/// The measurement step for `cfg`, with any compiler warnings.
pub fn build_stepper(cfg: &ExperimentConfig) -> Result<(Stepper, Vec<String>)> {
    let model = cfg.model()?;
    let plan = cfg.plan()?;
    match cfg.method.pulse_method() {
        None => Ok((Stepper::ideal(&model, &plan)?, Vec::new())),
        Some(method) => {
            let machine = cfg.machine()?;
            let program = compile_wbl_step(&model, &plan, method, &machine)?;
            let warnings = program.warnings().to_vec();
            Ok((Stepper::pulses(&program, plan.t0(), &machine, cfg.pulse_mode)?, warnings))
        }
    }
}

fn add_noise(series: &mut TimeSeries, amplitude: f64, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for v in &mut series.values {
        *v = (*v + rng.gen_range(-amplitude..=amplitude)).clamp(-1.0, 1.0);
    }
}

/// Runs the full pipeline. A fit that fails to converge is reported through
/// `record.converged`, not as an error.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let model = cfg.model()?;
    let machine = cfg.machine()?;
    let init = cfg.init()?;
    let q = cfg.samples()?;

    let prep = prepare_with_diagnostics(&model, &init, &cfg.schedule(&machine)?)?;
    let pairs = cfg.init_index()?.count_ones() as usize;
    let (exact_level, delta_exact) = reachable_gap(&model, pairs, &prep.state, cfg.population_floor)?;

    let (stepper, mut warnings) = build_stepper(cfg)?;
    warnings.extend(prep.warnings.iter().cloned());
    let damping = cfg.damping.then_some(&machine);
    let mut series = acquire(&prep.state, &stepper, q, cfg.observed_spin, damping)?;
    if cfg.noise > 0.0 {
        add_noise(&mut series, cfg.noise, cfg.rng_seed);
    }

    let spectrum = dft(&series)?;
    let seed = match cfg.fit_seed {
        Some(s) => s,
        None => peak_pick(&spectrum, cfg.exclude_dc)?.0,
    };
    let fit = fit_damped_sinusoid(&series, seed)?;
    let eps = epsilon_ft(q, cfg.t0)?;
    let offset = systematic_offset(fit.delta_exp, delta_exact);
    let hz = |w: f64| w / (2.0 * PI);

    let record = RunRecord {
        preset: cfg.preset.map(|p| p.name().to_string()),
        method: cfg.method.name().into(),
        pulse_mode: pulse_mode_name(cfg.pulse_mode).into(),
        t0_s: cfg.t0,
        k: cfg.k,
        q,
        observed_spin: cfg.observed_spin,
        damping: cfg.damping,
        exact_level,
        delta_exact_rad_s: delta_exact,
        delta_exact_over_2pi_hz: hz(delta_exact),
        delta_exp_rad_s: fit.delta_exp,
        delta_exp_over_2pi_hz: hz(fit.delta_exp),
        epsilon_ft_rad_s: eps,
        epsilon_ft_over_2pi_hz: hz(eps),
        systematic_offset_rad_s: offset,
        systematic_offset_over_2pi_hz: hz(offset),
        fit_seed_rad_s: seed,
        tau_e_s: fit.tau_e.is_finite().then_some(fit.tau_e),
        amplitude: fit.amplitude,
        phase_rad: fit.phase,
        residual_norm: fit.residual_norm,
        converged: fit.converged,
        wall_per_step_s: stepper.wall_per_step(),
        acquisition_wall_s: (q - 1) as f64 * stepper.wall_per_step(),
        prep_min_gap_rad_s: prep.min_gap,
        warnings,
    };
    Ok(RunOutput { record, series, spectrum, fit })
}

/// One varied key and the values it takes.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    pub key: String,
    pub values: Vec<String>,
}

impl SweepAxis {
    pub fn new(key: impl Into<String>, values: impl IntoIterator<Item = impl ToString>) -> Self {
        Self { key: key.into(), values: values.into_iter().map(|v| v.to_string()).collect() }
    }

    /// Parses `key=v1,v2,...`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (key, values) = spec
            .split_once('=')
            .ok_or_else(|| param(format!("sweep axis `{spec}` must have the form key=v1,v2,...")))?;
        let values: Vec<String> =
            values.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
        Ok(Self { key: key.trim().to_string(), values })
    }
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub assignments: Vec<(String, String)>,
    pub outcome: std::result::Result<RunRecord, String>,
}

#[derive(Debug, Clone)]
pub struct SweepTable {
    pub keys: Vec<String>,
    pub points: Vec<SweepPoint>,
    /// Slope of `log|offset|` against `log t0` when `plan.t0_s` is the only
    /// varied key.
    pub offset_exponent: Option<f64>,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for k in &self.keys {
            let _ = write!(out, "{k},");
        }
        out.push_str(
            "delta_exact_rad_s,delta_exp_rad_s,systematic_offset_rad_s,epsilon_ft_rad_s,converged,error\n",
        );
        for p in &self.points {
            for (_, v) in &p.assignments {
                let _ = write!(out, "{v},");
            }
            match &p.outcome {
                Ok(r) => {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},",
                        r.delta_exact_rad_s,
                        r.delta_exp_rad_s,
                        r.systematic_offset_rad_s,
                        r.epsilon_ft_rad_s,
                        r.converged
                    );
                }
                Err(e) => {
                    let _ = writeln!(out, ",,,,false,\"{}\"", e.replace('"', "'"));
                }
            }
        }
        out
    }
}

fn grid_points(axes: &[SweepAxis]) -> Vec<Vec<(String, String)>> {
    let mut points = vec![Vec::new()];
    for axis in axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                axis.values.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push((axis.key.clone(), v.clone()));
                    q
                })
            })
            .collect();
    }
    points
}

/// Runs `cfg` at every point of the Cartesian grid, in parallel. Failures are
/// recorded per point.
pub fn sweep(cfg: &ExperimentConfig, axes: &[SweepAxis]) -> Result<SweepTable> {
    if axes.is_empty() || axes.iter().any(|a| a.values.is_empty()) {
        return Err(param("sweep grid is empty"));
    }
    let points: Vec<SweepPoint> = grid_points(axes)
        .into_par_iter()
        .map(|assignments| {
            let outcome = (|| {
                let mut c = cfg.clone();
                for (k, v) in &assignments {
                    c.apply_override(&format!("{k}={v}"))?;
                }
                run(&c).map(|o| o.record)
            })()
            .map_err(|e: Error| e.to_string());
            SweepPoint { assignments, outcome }
        })
        .collect();

    let offset_exponent = if axes.len() == 1 && axes[0].key == "plan.t0_s" {
        let (xs, ys): (Vec<f64>, Vec<f64>) = points
            .iter()
            .filter_map(|p| p.outcome.as_ref().ok())
            .filter(|r| r.systematic_offset_rad_s != 0.0)
            .map(|r| (r.t0_s, r.systematic_offset_rad_s.abs()))
            .unzip();
        if xs.len() >= 2 {
            loglog_slope(&xs, &ys).ok()
        } else {
            None
        }
    } else {
        None
    };
    Ok(SweepTable { keys: axes.iter().map(|a| a.key.clone()).collect(), points, offset_exponent })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Preset;

    #[test]
    fn grid_is_cartesian() {
        let g = grid_points(&[SweepAxis::new("a", [1, 2]), SweepAxis::new("b", ["x", "y", "z"])]);
        assert_eq!(g.len(), 6);
        assert_eq!(g[5], vec![("a".into(), "2".into()), ("b".into(), "z".into())]);
    }

    #[test]
    fn empty_grid_is_rejected() {
        let cfg = ExperimentConfig::preset(Preset::H1);
        assert!(sweep(&cfg, &[]).is_err());
        assert!(sweep(&cfg, &[SweepAxis::new("plan.t0_s", Vec::<f64>::new())]).is_err());
    }

    #[test]
    fn sweep_records_point_failures() {
        let cfg = ExperimentConfig::preset(Preset::H1);
        let t = sweep(&cfg, &[SweepAxis::new("plan.t0_s", ["-1", "0.002"])]).unwrap();
        assert!(t.points[0].outcome.is_err());
        assert!(t.points[1].outcome.is_ok());
        assert!(t.to_csv().lines().count() == 3);
    }

    #[test]
    fn axis_parse() {
        let a = SweepAxis::parse("plan.t0_s=0.001, 0.002").unwrap();
        assert_eq!(a.values, vec!["0.001", "0.002"]);
        assert!(SweepAxis::parse("plan.t0_s").is_err());
    }
}
