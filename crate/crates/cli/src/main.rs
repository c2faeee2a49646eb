use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pairing_sim::adiabatic::{population_csv, population_report, prepare};
use pairing_sim::config::{ExperimentConfig, Preset};
use pairing_sim::exact::{reachable_gap, sector_gap, GapTarget, SectorSpectrum};
use pairing_sim::hamiltonian::{build_hamiltonian, HamiltonianPart};
use pairing_sim::nmr::{compile_wbl_step, Method};
use pairing_sim::pipeline::{run, sweep, write_atomic, SweepAxis};
use pairing_sim::resource::{estimate_csv, estimate_table, max_feasible_n};
use pairing_sim::Error;

// stdout writes ignore errors so piping into `head` does not panic
macro_rules! out {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

/// Pairing-Hamiltonian gap estimation with Trotterized and NMR pulse-level
/// simulation.
#[derive(Parser)]
#[command(name = "pairing-sim", version)]
struct Cli {
    /// Flat `key = value` config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base preset; overrides `model.preset` in the config file.
    #[arg(long, global = true)]
    preset: Option<Preset>,
    /// Output directory for artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// `key=value` applied after the config file; repeatable.
    #[arg(long = "override", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact sector spectrum and the gap the protocol observes.
    GapExact,
    /// Prepare, acquire, transform and fit.
    Run,
    /// Run over a Cartesian grid of config values.
    Sweep {
        /// `key=v1,v2,...`; repeatable.
        #[arg(long, required = true, value_name = "KEY=V1,V2,...")]
        vary: Vec<String>,
    },
    /// Gate-count feasibility table.
    Estimate {
        #[arg(long, value_delimiter = ',', default_values_t = vec![1usize, 2, 3, 4, 5, 10])]
        n: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = vec![1.0f64, 0.1, 0.01])]
        eps_over_delta: Vec<f64>,
        /// Gate time in units of the coherence time.
        #[arg(long, default_value_t = 1e-5)]
        gate_time: f64,
        /// Time budget in units of the coherence time.
        #[arg(long, default_value_t = 1.0)]
        budget: f64,
    },
    /// Print the pulse program of one measurement step.
    Compile,
    /// List the built-in presets.
    Presets,
}

struct Failure {
    code: u8,
    msg: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Config { .. }
            | Error::Parse { .. }
            | Error::Parameter(_)
            | Error::UnrealizableCoupling(_)
            | Error::Compile(_) => 2,
            Error::NoReachableState { .. } | Error::NoPeak | Error::Degenerate(_) => 3,
            Error::Contract(_) | Error::Capacity { .. } => 4,
            Error::Io(_) => 1,
        };
        Failure { code, msg: e.to_string() }
    }
}

type CliResult = Result<u8, Failure>;

fn load_config(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::parse_with_base(&std::fs::read_to_string(path)?, cli.preset)?,
        None => ExperimentConfig::preset(cli.preset.unwrap_or(Preset::H1)),
    };
    for o in &cli.overrides {
        cfg.apply_override(o)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit(out: Option<&Path>, name: &str, body: &str) -> Result<(), Error> {
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let path = write_atomic(&dir.join(name), body)?;
            eprintln!("wrote {}", path.display());
        }
        None => {
            let _ = std::io::stdout().lock().write_all(body.as_bytes());
        }
    }
    Ok(())
}

fn gap_exact(cli: &Cli) -> CliResult {
    let cfg = load_config(cli)?;
    let model = cfg.model()?;
    let pairs = cfg.init_index()?.count_ones() as usize;
    let spec = SectorSpectrum::new(&model, pairs)?;
    let hz = |w: f64| w / (2.0 * std::f64::consts::PI);
    out!("sector with {pairs} pairs, {} states", spec.basis.len());
    for (k, e) in spec.eigen.values().iter().enumerate() {
        out!("  E{k} = {e:.6} rad/s");
    }
    if spec.basis.len() > 1 {
        let first = sector_gap(&model, pairs, GapTarget::First)?;
        out!("first gap: {first:.6} rad/s = 2pi x {:.4} Hz", hz(first));
    }
    let prepared = prepare(&model, &cfg.init()?, &cfg.schedule(&cfg.machine()?)?)?;
    let (level, gap) = reachable_gap(&model, pairs, &prepared, cfg.population_floor)?;
    out!("reachable level {level}: {gap:.6} rad/s = 2pi x {:.4} Hz", hz(gap));
    if let Some(dir) = &cli.out {
        let h = build_hamiltonian(&model, HamiltonianPart::Full)?.realize()?;
        emit(Some(dir), "populations.csv", &population_csv(&population_report(&prepared, &h)?))?;
    }
    Ok(0)
}

fn run_cmd(cli: &Cli) -> CliResult {
    let cfg = load_config(cli)?;
    let output = run(&cfg)?;
    if let Some(dir) = &cli.out {
        for path in output.write(dir)? {
            eprintln!("wrote {}", path.display());
        }
    }
    out!("{}", output.record.to_json());
    for w in &output.record.warnings {
        eprintln!("warning: {w}");
    }
    if output.record.converged {
        Ok(0)
    } else {
        eprintln!("fit did not converge");
        Ok(3)
    }
}

fn sweep_cmd(cli: &Cli, vary: &[String]) -> CliResult {
    let cfg = load_config(cli)?;
    let axes = vary.iter().map(|v| SweepAxis::parse(v)).collect::<Result<Vec<_>, _>>()?;
    let table = sweep(&cfg, &axes)?;
    emit(cli.out.as_deref(), "sweep.csv", &table.to_csv())?;
    if let Some(p) = table.offset_exponent {
        eprintln!("offset exponent vs t0: {p:.4}");
    }
    let failed = table.points.iter().filter(|p| p.outcome.is_err()).count();
    if failed > 0 {
        eprintln!("{failed} of {} points failed", table.points.len());
    }
    Ok(0)
}

fn estimate_cmd(cli: &Cli, n: &[usize], eps: &[f64], gate_time: f64, budget: f64) -> CliResult {
    let rows = estimate_table(n, eps, gate_time, budget)?;
    emit(cli.out.as_deref(), "estimate.csv", &estimate_csv(&rows))?;
    for &e in eps {
        eprintln!("eps/delta = {e}: largest feasible n = {}", max_feasible_n(1.0, e, gate_time, budget)?);
    }
    Ok(0)
}

fn compile_cmd(cli: &Cli) -> CliResult {
    let cfg = load_config(cli)?;
    let method = cfg.method.pulse_method().unwrap_or(Method::W1);
    let machine = cfg.machine()?;
    let program = compile_wbl_step(&cfg.model()?, &cfg.plan()?, method, &machine)?;
    for w in program.warnings() {
        eprintln!("warning: {w}");
    }
    emit(cli.out.as_deref(), "program.txt", &program.to_text())?;
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::GapExact => gap_exact(&cli),
        Command::Run => run_cmd(&cli),
        Command::Sweep { vary } => sweep_cmd(&cli, vary),
        Command::Estimate { n, eps_over_delta, gate_time, budget } => {
            estimate_cmd(&cli, n, eps_over_delta, *gate_time, *budget)
        }
        Command::Compile => compile_cmd(&cli),
        Command::Presets => {
            for p in Preset::ALL {
                out!("{:<4} {}", p.name(), p.description());
            }
            Ok(0)
        }
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
