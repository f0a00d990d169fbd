//! Argument parsing and subcommand dispatch.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use axion_core::mixing::LabInputs;
use axion_core::oracle::verify_reference_coefficients;
use axion_core::units::UnitProvenance;
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::config::{parse_config, Format, Kind, RunConfig};
use crate::emit::emit;
use crate::error::CliError;
use crate::runner::run;

#[derive(Debug, Parser)]
#[command(
    name = "axion-sim",
    version,
    about = "Photon-axion conversion in truncated Fock space"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Classical conversion probability from lab inputs.
    Classical(RunArgs),
    /// Single-photon conversion.
    Single(RunArgs),
    /// Single-photon survival.
    Survival(RunArgs),
    /// Coherent-state conversion.
    Coherent(RunArgs),
    /// Photon-added squeezed coherent conversion.
    Squeezed(RunArgs),
    /// Sweep of the kind named in the config.
    Sweep(RunArgs),
    /// Recovers the perturbative bracket coefficients and compares them with the reference values.
    VerifyCoefficients(VerifyArgs),
    /// Dimensionless lab combinations and the unit constants.
    Units(UnitsArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Dotted-path override, e.g. `scenario.lab.L=500`.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
    #[arg(long, env = "AXION_SIM_OUT")]
    out: Option<PathBuf>,
    #[arg(long, value_enum, value_delimiter = ',')]
    formats: Option<Vec<Format>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = "AXION_SIM_THREADS")]
    threads: Option<usize>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Truncation per mode of the four-mode layout.
    #[arg(long, default_value_t = 7)]
    n_max: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Writes `coefficients.json` here.
    #[arg(long, env = "AXION_SIM_OUT")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct UnitsArgs {
    /// Reads `scenario.lab` from this config instead of the benchmark inputs.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
}

/// Benchmark inputs for the order-of-magnitude estimates.
pub const BENCHMARK_LAB: LabInputs = LabInputs {
    m: 1e-6,
    e_gamma: 1e-6,
    g: 1e-10,
    b_t: 10.0,
    l: 1000.0,
};

fn run_command(kind: Option<Kind>, args: RunArgs) -> Result<i32, CliError> {
    let mut config: RunConfig = parse_config(&args.config, &args.params)?;
    match (kind, config.scenario.kind) {
        (Some(k), Some(c)) if k != c => {
            return Err(CliError::Config(format!(
                "{}: scenario.kind is {c} but the subcommand runs {k}",
                args.config.display()
            )))
        }
        (Some(k), _) => config.scenario.kind = Some(k),
        (None, None) => {
            return Err(CliError::Config(format!(
                "{}: sweep needs scenario.kind",
                args.config.display()
            )))
        }
        (None, Some(_)) => {}
    }
    if kind.is_none() && config.sweep.is_none() {
        return Err(CliError::Config(format!(
            "{}: sweep needs a sweep section",
            args.config.display()
        )));
    }
    if let Some(f) = args.formats {
        config.output.formats = f;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if let Some(out) = args.out {
        config.output.directory = Some(out);
    }
    let dir = config.output.directory.clone().unwrap_or_else(|| PathBuf::from("out"));
    let scale = config.sweep.as_ref().map(|s| s.scale).unwrap_or_default();

    let start = Instant::now();
    let records = run(&config, args.threads)?;
    let elapsed = start.elapsed().as_secs_f64();
    let written = emit(&records, &config.output.formats, &dir, scale)?;
    let timing = dir.join("timing.json");
    let body = json!({ "wall_clock_seconds": elapsed, "points": records.len() });
    fs::write(&timing, format!("{body:#}\n")).map_err(|e| CliError::io(&timing, e))?;

    let flagged = records.iter().filter(|r| r.flagged).count();
    for r in records.iter().filter(|r| r.flagged) {
        eprintln!(
            "flagged row {}: {}",
            r.index,
            r.error.as_deref().unwrap_or("leakage above threshold")
        );
    }
    for p in &written {
        println!("{}", p.display());
    }
    eprintln!("{} points in {elapsed:.3} s, {flagged} flagged", records.len());
    Ok(if flagged > 0 { 3 } else { 0 })
}

fn verify(args: VerifyArgs) -> Result<i32, CliError> {
    let (decompositions, checks) = verify_reference_coefficients(args.n_max, args.seed)
        .map_err(|e| CliError::Config(format!("verify-coefficients: {e}")))?;
    for c in &checks {
        println!(
            "{} order {} {}: recovered {:.9} expected {} {}",
            c.channel,
            c.order,
            c.monomial,
            c.recovered,
            c.expected,
            if c.passed() { "ok" } else { "MISMATCH" }
        );
    }
    for d in &decompositions {
        println!(
            "{} order {}: residual {:.3e}, condition {:.3e}, phase {}",
            d.channel, d.order, d.relative_residual, d.condition, d.global_phase
        );
    }
    if let Some(dir) = args.out {
        fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        let path = dir.join("coefficients.json");
        let body =
            json!({ "n_max": args.n_max, "seed": args.seed, "decompositions": decompositions, "checks": checks });
        fs::write(&path, format!("{body:#}\n")).map_err(|e| CliError::io(&path, e))?;
    }
    Ok(if checks.iter().all(|c| c.passed()) { 0 } else { 1 })
}

fn units(args: UnitsArgs) -> Result<i32, CliError> {
    let lab = match &args.config {
        Some(path) => parse_config(path, &args.params)?.scenario.lab,
        None if args.params.is_empty() => BENCHMARK_LAB,
        None => return Err(CliError::Config("--param needs --config".into())),
    };
    lab.validate()
        .map_err(|e| CliError::Config(format!("scenario.lab: {e}")))?;
    let body = json!({
        "lab": lab,
        "g_B_L": lab.g_b_l(),
        "mass_phase": lab.mass_phase(),
        "units": UnitProvenance::default(),
    });
    println!("{body:#}");
    Ok(0)
}

/// Parses `args` and runs the subcommand; returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Classical(a) => run_command(Some(Kind::Classical), a),
        Command::Single(a) => run_command(Some(Kind::SinglePhoton), a),
        Command::Survival(a) => run_command(Some(Kind::PhotonSurvival), a),
        Command::Coherent(a) => run_command(Some(Kind::Coherent), a),
        Command::Squeezed(a) => run_command(Some(Kind::SqueezedCoherentAdded), a),
        Command::Sweep(a) => run_command(None, a),
        Command::VerifyCoefficients(a) => verify(a),
        Command::Units(a) => units(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
