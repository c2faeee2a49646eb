//! Experiment configuration: built-in presets and a flat `key = value` file
//! format with dotted keys.
//!
//! Times carry an `_s` suffix. Frequencies are given either in rad/s
//! (`_rad_s`) or in Hz (`_hz`, multiplied by 2 pi on input). Lists are
//! comma-separated; matrix rows are separated by `;`.
//!
//! | key | value |
//! |-----|-------|
//! | `model.preset` | `h1` or `h2`; applied before every other key |
//! | `model.convention_factor` | positive real, multiplies every coefficient |
//! | `model.nu_rad_s`, `model.nu_hz` | on-site energies |
//! | `model.coupling_rad_s`, `model.coupling_hz` | symmetric coupling matrix |
//! | `machine.j_hz` | scalar couplings (Hz, symmetric, zero diagonal) |
//! | `machine.t_pi_s` | pi-pulse duration |
//! | `machine.t2_s` | one value for all spins, or one per spin |
//! | `init.state` | bit string, qubit 1 first (`011`) |
//! | `schedule.steps`, `schedule.t_ad_s` | adiabatic interpolation |
//! | `schedule.evolver` | `auto`, `exact`, `ideal` or `pulses` |
//! | `plan.t0_s`, `plan.k`, `plan.order` | Trotter step (`wbl3` or `first`) |
//! | `method` | `ideal`, `w1` or `w2` |
//! | `pulse_mode` | `delta` or `finite` |
//! | `acquire.q` | number of samples |
//! | `acquire.duration_s` | if set, `q = round(duration / t0)` |
//! | `acquire.observed_spin` | 1-based |
//! | `acquire.damping` | `true` or `false` |
//! | `acquire.noise`, `acquire.seed` | uniform additive noise amplitude, RNG seed |
//! | `fit.exclude_dc` | `true` or `false` |
//! | `fit.seed_rad_s`, `fit.seed_hz` | overrides the peak-picked fit seed |
//! | `gap.population_floor` | in (0, 1) |

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::adiabatic::{AdiabaticSchedule, Evolver};
use crate::error::{Error, Result};
use crate::exact::DEFAULT_POPULATION_FLOOR;
use crate::hamiltonian::PairingModel;
use crate::nmr::{Method, PulseMode, SpinSystem, CHFBR2_J_CF, CHFBR2_J_HC, CHFBR2_J_HF, DEFAULT_T2, DEFAULT_T_PI};
use crate::operator::StateVector;
use crate::trotter::{Realizer, TrotterOrder, TrotterPlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    H1,
    H2,
}

impl Preset {
    pub const ALL: [Preset; 2] = [Preset::H1, Preset::H2];

    pub fn name(self) -> &'static str {
        match self {
            Preset::H1 => "h1",
            Preset::H2 => "h2",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Preset::H1 => "three modes, all pairs coupled with V = pi J of CHFBr2; t0 = 2 ms, Q = 200",
            Preset::H2 => "three modes, only modes 1 and 2 coupled (V12 = pi J_HC), convention factor 2; t0 = 0.5 ms, Q = 200",
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "h1" => Ok(Preset::H1),
            "h2" => Ok(Preset::H2),
            other => Err(config_err("model.preset", format!("unknown preset `{other}` (expected h1 or h2)"))),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How each Trotter step of the measurement is realized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepMethod {
    Ideal,
    W1,
    W2,
}

impl StepMethod {
    pub fn name(self) -> &'static str {
        match self {
            StepMethod::Ideal => "ideal",
            StepMethod::W1 => "w1",
            StepMethod::W2 => "w2",
        }
    }

    pub fn pulse_method(self) -> Option<Method> {
        match self {
            StepMethod::Ideal => None,
            StepMethod::W1 => Some(Method::W1),
            StepMethod::W2 => Some(Method::W2),
        }
    }
}

/// Evolver for the adiabatic preparation. `Auto` follows the step method:
/// ideal Trotter steps for `ideal`, compiled pulses otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrepEvolver {
    Auto,
    Exact,
    Ideal,
    Pulses,
}

pub fn pulse_mode_name(mode: PulseMode) -> &'static str {
    match mode {
        PulseMode::Delta => "delta",
        PulseMode::Finite => "finite",
    }
}

/// Flat experiment description. Components are validated when built.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub preset: Option<Preset>,
    pub nu: Vec<f64>,
    pub coupling: Vec<Vec<f64>>,
    pub convention_factor: f64,
    pub j_hz: Vec<Vec<f64>>,
    pub t_pi: f64,
    pub t2: Vec<f64>,
    pub init_state: String,
    pub adiabatic_steps: usize,
    pub t_ad: f64,
    pub prep_evolver: PrepEvolver,
    pub t0: f64,
    pub k: usize,
    pub order: TrotterOrder,
    pub method: StepMethod,
    pub pulse_mode: PulseMode,
    pub q: usize,
    pub duration: Option<f64>,
    pub observed_spin: usize,
    pub damping: bool,
    pub noise: f64,
    pub rng_seed: u64,
    pub exclude_dc: bool,
    pub fit_seed: Option<f64>,
    pub population_floor: f64,
}

fn config_err(key: &str, msg: impl Into<String>) -> Error {
    Error::Config { key: key.to_string(), msg: msg.into() }
}

fn chfbr2_j() -> Vec<Vec<f64>> {
    vec![
        vec![0.0, CHFBR2_J_HC, CHFBR2_J_HF],
        vec![CHFBR2_J_HC, 0.0, CHFBR2_J_CF],
        vec![CHFBR2_J_HF, CHFBR2_J_CF, 0.0],
    ]
}

impl ExperimentConfig {
    pub fn preset(preset: Preset) -> Self {
        let (coupling, factor, t0) = match preset {
            Preset::H1 => (
                vec![
                    vec![0.0, 224.0 * PI, 50.0 * PI],
                    vec![224.0 * PI, 0.0, -311.0 * PI],
                    vec![50.0 * PI, -311.0 * PI, 0.0],
                ],
                1.0,
                2e-3,
            ),
            Preset::H2 => (
                vec![
                    vec![0.0, 224.0 * PI, 0.0],
                    vec![224.0 * PI, 0.0, 0.0],
                    vec![0.0, 0.0, 0.0],
                ],
                2.0,
                0.5e-3,
            ),
        };
        Self {
            preset: Some(preset),
            nu: vec![150.0 * PI, 100.0 * PI, 50.0 * PI],
            coupling,
            convention_factor: factor,
            j_hz: chfbr2_j(),
            t_pi: DEFAULT_T_PI,
            t2: vec![DEFAULT_T2; 3],
            init_state: "011".into(),
            adiabatic_steps: 4,
            t_ad: 1.0 / 700.0,
            prep_evolver: PrepEvolver::Auto,
            t0,
            k: 2,
            order: TrotterOrder::Wbl3,
            method: StepMethod::Ideal,
            pulse_mode: PulseMode::Delta,
            q: 200,
            duration: None,
            observed_spin: 1,
            damping: false,
            noise: 0.0,
            rng_seed: 0,
            exclude_dc: true,
            fit_seed: None,
            population_floor: DEFAULT_POPULATION_FLOOR,
        }
    }

    /// Parses a config file. `model.preset` (default `h1`) is applied first,
    /// the remaining keys in file order.
    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_with_base(text, None)
    }

    /// Like [`parse`](Self::parse); `base` wins over a preset named in the
    /// file.
    pub fn parse_with_base(text: &str, base: Option<Preset>) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                msg: format!("expected `key = value`, got `{line}`"),
            })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::Parse { line: i + 1, msg: "empty key".into() });
            }
            entries.push((key.to_string(), value.trim().to_string()));
        }
        let preset = match base {
            Some(p) => p,
            None => match entries.iter().rev().find(|(k, _)| k == "model.preset") {
                Some((_, v)) => v.parse()?,
                None => Preset::H1,
            },
        };
        let mut cfg = Self::preset(preset);
        for (k, v) in entries.iter().filter(|(k, _)| k != "model.preset") {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| config_err(assignment.trim(), "override must have the form key=value"))?;
        let k = k.trim();
        if k == "model.preset" {
            let keep = self.clone();
            *self = Self::preset(v.parse()?);
            self.method = keep.method;
            self.pulse_mode = keep.pulse_mode;
            return Ok(());
        }
        self.set(k, v.trim())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let err = |msg: String| config_err(key, msg);
        match key {
            "model.preset" => *self = Self::preset(value.parse()?),
            "model.convention_factor" => self.convention_factor = real(key, value)?,
            "model.nu_rad_s" => self.nu = list(key, value)?,
            "model.nu_hz" => self.nu = list(key, value)?.into_iter().map(|x| 2.0 * PI * x).collect(),
            "model.coupling_rad_s" => self.coupling = matrix(key, value)?,
            "model.coupling_hz" => {
                self.coupling = matrix(key, value)?
                    .into_iter()
                    .map(|row| row.into_iter().map(|x| 2.0 * PI * x).collect())
                    .collect()
            }
            "machine.j_hz" => self.j_hz = matrix(key, value)?,
            "machine.t_pi_s" => self.t_pi = real(key, value)?,
            "machine.t2_s" => self.t2 = list(key, value)?,
            "init.state" => {
                if value.is_empty() || !value.chars().all(|c| c == '0' || c == '1') {
                    return Err(err(format!("`{value}` is not a bit string")));
                }
                self.init_state = value.to_string();
            }
            "schedule.steps" => self.adiabatic_steps = integer(key, value)?,
            "schedule.t_ad_s" => self.t_ad = real(key, value)?,
            "schedule.evolver" => {
                self.prep_evolver = match value.to_ascii_lowercase().as_str() {
                    "auto" => PrepEvolver::Auto,
                    "exact" => PrepEvolver::Exact,
                    "ideal" => PrepEvolver::Ideal,
                    "pulses" => PrepEvolver::Pulses,
                    v => return Err(err(format!("unknown evolver `{v}`"))),
                }
            }
            "plan.t0_s" => self.t0 = real(key, value)?,
            "plan.k" => self.k = integer(key, value)?,
            "plan.order" => {
                self.order = match value.to_ascii_lowercase().as_str() {
                    "wbl3" => TrotterOrder::Wbl3,
                    "first" => TrotterOrder::First,
                    v => return Err(err(format!("unknown order `{v}`"))),
                }
            }
            "method" => {
                self.method = match value.to_ascii_lowercase().as_str() {
                    "ideal" => StepMethod::Ideal,
                    "w1" => StepMethod::W1,
                    "w2" => StepMethod::W2,
                    v => return Err(err(format!("unknown method `{v}`"))),
                }
            }
            "pulse_mode" => {
                self.pulse_mode = match value.to_ascii_lowercase().as_str() {
                    "delta" => PulseMode::Delta,
                    "finite" => PulseMode::Finite,
                    v => return Err(err(format!("unknown pulse mode `{v}`"))),
                }
            }
            "acquire.q" => self.q = integer(key, value)?,
            "acquire.duration_s" => self.duration = Some(real(key, value)?),
            "acquire.observed_spin" => self.observed_spin = integer(key, value)?,
            "acquire.damping" => self.damping = boolean(key, value)?,
            "acquire.noise" => self.noise = real(key, value)?,
            "acquire.seed" => self.rng_seed = integer(key, value)? as u64,
            "fit.exclude_dc" => self.exclude_dc = boolean(key, value)?,
            "fit.seed_rad_s" => self.fit_seed = Some(real(key, value)?),
            "fit.seed_hz" => self.fit_seed = Some(2.0 * PI * real(key, value)?),
            "gap.population_floor" => self.population_floor = real(key, value)?,
            _ => return Err(err("unknown key".into())),
        }
        Ok(())
    }

    pub fn model(&self) -> Result<PairingModel> {
        if !(self.convention_factor.is_finite() && self.convention_factor > 0.0) {
            return Err(config_err("model.convention_factor", "must be positive"));
        }
        PairingModel::with_convention(self.nu.clone(), self.coupling.clone(), self.convention_factor)
            .map_err(|e| config_err("model.coupling_rad_s", e.to_string()))
    }

    pub fn machine(&self) -> Result<SpinSystem> {
        if !(self.t_pi.is_finite() && self.t_pi >= 0.0) {
            return Err(config_err("machine.t_pi_s", "must be non-negative"));
        }
        let t2 = match self.t2.as_slice() {
            [one] => vec![*one; self.j_hz.len()],
            many => many.to_vec(),
        };
        if t2.iter().any(|&t| !(t > 0.0)) || t2.len() != self.j_hz.len() {
            return Err(config_err("machine.t2_s", "needs positive values, one or one per spin"));
        }
        SpinSystem::new(self.j_hz.clone(), self.t_pi, t2).map_err(|e| config_err("machine.j_hz", e.to_string()))
    }

    pub fn plan(&self) -> Result<TrotterPlan> {
        if !(self.t0.is_finite() && self.t0 > 0.0) {
            return Err(config_err("plan.t0_s", format!("plan.t0 must be positive, got {}", self.t0)));
        }
        if self.k == 0 {
            return Err(config_err("plan.k", "must be at least 1"));
        }
        TrotterPlan::new(self.t0, self.k, self.order).map_err(|e| config_err("plan.t0_s", e.to_string()))
    }

    pub fn init_index(&self) -> Result<usize> {
        let n = self.nu.len();
        if self.init_state.len() != n {
            return Err(config_err("init.state", format!("needs {n} bits")));
        }
        usize::from_str_radix(&self.init_state, 2).map_err(|e| config_err("init.state", e.to_string()))
    }

    pub fn init(&self) -> Result<StateVector> {
        StateVector::basis(1 << self.nu.len(), self.init_index()?)
    }

    pub fn realizer(&self, machine: &SpinSystem) -> Realizer {
        match self.method.pulse_method() {
            None => Realizer::Ideal,
            Some(method) => Realizer::Nmr { method, machine: machine.clone(), mode: self.pulse_mode },
        }
    }

    pub fn schedule(&self, machine: &SpinSystem) -> Result<AdiabaticSchedule> {
        if self.adiabatic_steps == 0 {
            return Err(config_err("schedule.steps", "must be at least 1"));
        }
        if !(self.t_ad.is_finite() && self.t_ad >= 0.0) {
            return Err(config_err("schedule.t_ad_s", "must be non-negative"));
        }
        let pulses = |method| Realizer::Nmr { method, machine: machine.clone(), mode: self.pulse_mode };
        let evolver = match self.prep_evolver {
            PrepEvolver::Exact => Evolver::Exact,
            PrepEvolver::Ideal => Evolver::Trotter { k: self.k, realizer: Realizer::Ideal },
            PrepEvolver::Auto => Evolver::Trotter { k: self.k, realizer: self.realizer(machine) },
            PrepEvolver::Pulses => Evolver::Trotter {
                k: self.k,
                realizer: pulses(self.method.pulse_method().unwrap_or(Method::W1)),
            },
        };
        AdiabaticSchedule::new(self.adiabatic_steps, self.t_ad, evolver)
            .map_err(|e| config_err("schedule.steps", e.to_string()))
    }

    /// Number of samples, honoring `acquire.duration_s`.
    pub fn samples(&self) -> Result<usize> {
        let q = match self.duration {
            Some(d) if d.is_finite() && d > 0.0 && self.t0 > 0.0 => (d / self.t0).round() as usize,
            Some(_) => return Err(config_err("acquire.duration_s", "must be positive")),
            None => self.q,
        };
        if q < 8 {
            return Err(config_err("acquire.q", format!("need at least 8 samples, got {q}")));
        }
        Ok(q)
    }

    /// Checks every component.
    pub fn validate(&self) -> Result<()> {
        let model = self.model()?;
        let machine = self.machine()?;
        if machine.n_spins() != model.n_modes() {
            return Err(config_err("machine.j_hz", "spin count differs from the model's mode count"));
        }
        self.plan()?;
        self.schedule(&machine)?;
        self.init_index()?;
        self.samples()?;
        if self.observed_spin == 0 || self.observed_spin > model.n_modes() {
            return Err(config_err("acquire.observed_spin", "outside the register"));
        }
        if !(self.noise.is_finite() && self.noise >= 0.0) {
            return Err(config_err("acquire.noise", "must be non-negative"));
        }
        if !(self.population_floor > 0.0 && self.population_floor < 1.0) {
            return Err(config_err("gap.population_floor", "must lie in (0, 1)"));
        }
        if let Some(s) = self.fit_seed {
            if !(s.is_finite() && s > 0.0) {
                return Err(config_err("fit.seed_rad_s", "must be positive"));
            }
        }
        Ok(())
    }
}

fn real(key: &str, value: &str) -> Result<f64> {
    let v: f64 = value.trim().parse().map_err(|_| config_err(key, format!("`{value}` is not a number")))?;
    if !v.is_finite() {
        return Err(config_err(key, "must be finite"));
    }
    Ok(v)
}

fn integer(key: &str, value: &str) -> Result<usize> {
    value
        .trim()
        .parse()
        .map_err(|_| config_err(key, format!("`{value}` is not a non-negative integer")))
}

fn boolean(key: &str, value: &str) -> Result<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(config_err(key, format!("`{value}` is not a boolean"))),
    }
}

fn list(key: &str, value: &str) -> Result<Vec<f64>> {
    value.split(',').map(|x| real(key, x)).collect()
}

fn matrix(key: &str, value: &str) -> Result<Vec<Vec<f64>>> {
    let rows: Vec<Vec<f64>> = value.split(';').map(|r| list(key, r)).collect::<Result<_>>()?;
    if rows.iter().any(|r| r.len() != rows.len()) {
        return Err(config_err(key, "matrix must be square"));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for p in Preset::ALL {
            let cfg = ExperimentConfig::preset(p);
            cfg.validate().unwrap();
            assert_eq!(cfg.init_index().unwrap(), 3);
        }
    }

    #[test]
    fn parse_file() {
        let text = "# comment\nmodel.preset = h2\nplan.t0_s = 0.001 # trailing\nacquire.q=400\nmethod = W2\npulse_mode = finite\nmodel.nu_hz = 75, 50, 25\n";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.preset, Some(Preset::H2));
        assert_eq!(cfg.t0, 1e-3);
        assert_eq!(cfg.q, 400);
        assert_eq!(cfg.method, StepMethod::W2);
        assert_eq!(cfg.pulse_mode, PulseMode::Finite);
        assert!((cfg.nu[0] - 150.0 * PI).abs() < 1e-9);
        assert_eq!(cfg.convention_factor, 2.0);
    }

    #[test]
    fn negative_t0_names_the_key() {
        let cfg = ExperimentConfig::parse("plan.t0_s = -0.002").unwrap();
        match cfg.validate() {
            Err(Error::Config { key, .. }) => assert!(key.starts_with("plan.t0")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn syntax_and_value_errors() {
        assert!(matches!(ExperimentConfig::parse("plan.t0_s 0.1"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(ExperimentConfig::parse("bogus = 1"), Err(Error::Config { .. })));
        assert!(matches!(ExperimentConfig::parse("plan.k = two"), Err(Error::Config { .. })));
        assert!(matches!(ExperimentConfig::parse("model.preset = h3"), Err(Error::Config { .. })));
        assert!(matches!(ExperimentConfig::parse("model.coupling_rad_s = 0,1;1,0,2"), Err(Error::Config { .. })));
    }

    #[test]
    fn overrides() {
        let mut cfg = ExperimentConfig::preset(Preset::H1);
        cfg.apply_override("acquire.duration_s=0.4").unwrap();
        cfg.apply_override("plan.t0_s = 0.00025").unwrap();
        assert_eq!(cfg.samples().unwrap(), 1600);
        assert!(cfg.apply_override("no_equals").is_err());
        cfg.apply_override("model.coupling_hz = 0,112,0; 112,0,0; 0,0,0").unwrap();
        assert!((cfg.coupling[0][1] - 224.0 * PI).abs() < 1e-9);
    }
}
