// Copyright 2026 The chiralwg Authors
// SPDX-License-Identifier: Apache-2.0

//! Command-line front end.
//!
//! Exit codes: 0 success, 1 configuration error, 2 tolerance violation (the
//! bundle is still written), 3 I/O failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::RunConfig;
use crate::controls::{Channel, ControlSet, CsvWaveformError, Waveform};
use crate::error::Error;
use crate::molecule::Design;
use crate::observables::Direction;
use crate::output;
use crate::protocols::{run_protocol, Protocol, ProtocolOptions};
use crate::sweeps;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_TOLERANCE: i32 = 2;
pub const EXIT_IO: i32 = 3;

/// Largest flux deviation accepted by `oracle`.
pub const ORACLE_TOLERANCE: f64 = 1e-6;

pub const DT_ENV: &str = "CHIRALWG_DT";

#[derive(Parser, Debug)]
#[command(
    name = "chiralwg",
    version,
    about = "Directional single-photon protocols of a two-element artificial molecule"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one protocol and write timeseries.csv, metrics.json and manifest.json.
    Run(RunArgs),
    /// Run a parameter sweep and write sweep.csv, metrics.json and manifest.json.
    Sweep(SweepArgs),
    /// Compare the master-equation emission fluxes with the amplitude equations.
    Oracle(OracleArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// TOML configuration file; built-in defaults when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a configuration key, `key=value` or `section.key=value`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory (default: `[output] dir`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ProtocolArg {
    Emit,
    Absorb,
    Transmit,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DirectionArg {
    Right,
    Left,
}

impl From<DirectionArg> for Direction {
    fn from(d: DirectionArg) -> Self {
        match d {
            DirectionArg::Right => Direction::Right,
            DirectionArg::Left => Direction::Left,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SweepArg {
    Eta,
    #[value(name = "detuning_distance", alias = "detuning-distance")]
    DetuningDistance,
    Bandwidth,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value = "emit")]
    protocol: ProtocolArg,
    /// Intended emission direction.
    #[arg(long, value_enum, default_value = "right")]
    direction: DirectionArg,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Sweep to run (default: `[sweep] name`).
    #[arg(long, value_enum)]
    sweep: Option<SweepArg>,
    /// Worker threads; does not affect the output.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value = "right")]
    direction: DirectionArg,
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Failure { code: EXIT_CONFIG, message: message.into() }
    }

    fn io(message: impl Into<String>) -> Self {
        Failure { code: EXIT_IO, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::ToleranceViolation { .. } | Error::LeakageViolation { .. } => EXIT_TOLERANCE,
            _ => EXIT_CONFIG,
        };
        Failure { code, message: e.to_string() }
    }
}

type CliResult = std::result::Result<i32, Failure>;

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Oracle(a) => cmd_oracle(a),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

struct Loaded {
    config: RunConfig,
    base_dir: PathBuf,
}

fn load(common: &Common) -> std::result::Result<Loaded, Failure> {
    let (text, base_dir) = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::io(format!("cannot read {}: {e}", path.display())))?;
            (text, path.parent().map(Path::to_path_buf).unwrap_or_default())
        }
        None => (String::new(), PathBuf::new()),
    };
    let mut config = RunConfig::from_toml_with_overrides(&text, &common.set)?;
    if let Ok(raw) = std::env::var(DT_ENV) {
        let dt: f64 = raw.trim().parse().map_err(|_| Failure::config(format!("{DT_ENV}={raw} is not a number")))?;
        config.integrator.dt = Some(dt);
        config.validate()?;
    }
    Ok(Loaded { config, base_dir })
}

fn out_dir(common: &Common, config: &RunConfig) -> PathBuf {
    common.out.clone().unwrap_or_else(|| config.output.dir.clone())
}

/// Protocol options, with CSV waveforms replacing generated channels.
fn options(loaded: &Loaded, protocol: Protocol) -> std::result::Result<ProtocolOptions, Failure> {
    let cfg = &loaded.config;
    let mut opts = ProtocolOptions {
        half_window: cfg.controls.half_window,
        integrator: cfg.integrator.to_config(),
        ..ProtocolOptions::default()
    };
    let c = &cfg.controls;
    let tabulated = [
        (Channel::Gamma1, &c.gamma1_csv),
        (Channel::Gamma2, &c.gamma2_csv),
        (Channel::G1, &c.g1_csv),
        (Channel::G2, &c.g2_csv),
        (Channel::GammaA, &c.gamma_a_csv),
    ];
    if tabulated.iter().all(|(_, p)| p.is_none()) {
        return Ok(opts);
    }
    let mut model = cfg.model.clone();
    if protocol != Protocol::Emission {
        model.include_ancilla = true;
    }
    let mut controls = match protocol {
        Protocol::Emission => ControlSet::emission(&model, c.half_window),
        Protocol::Absorption => ControlSet::absorption(&model, c.half_window),
        Protocol::Transmission => ControlSet::transmission(&model, c.half_window),
    }?;
    for (channel, path) in tabulated {
        if let Some(path) = path {
            let full = if path.is_absolute() { path.clone() } else { loaded.base_dir.join(path) };
            let w = Waveform::from_csv(&full).map_err(|e| match e {
                CsvWaveformError::Csv(ref inner) if inner.is_io_error() => {
                    Failure::io(format!("{}: {e}", full.display()))
                }
                _ => Failure::config(format!("{}: {e}", full.display())),
            })?;
            controls.set(channel, Some(w));
        }
    }
    opts.controls = Some(controls);
    Ok(opts)
}

fn write_bundle(
    dir: &Path,
    files: Vec<(&str, String)>,
    command: &str,
    target: &str,
    config: &RunConfig,
) -> std::result::Result<(), Failure> {
    let manifest = output::manifest_json(command, target, &config.to_toml(), &files);
    let mut all = files;
    all.push(("manifest.json", manifest));
    output::write_files(dir, &all).map_err(|e| Failure::io(format!("cannot write to {}: {e}", dir.display())))
}

fn cmd_run(args: RunArgs) -> CliResult {
    let loaded = load(&args.common)?;
    let protocol = match args.protocol {
        ProtocolArg::Emit => Protocol::Emission,
        ProtocolArg::Absorb => Protocol::Absorption,
        ProtocolArg::Transmit => Protocol::Transmission,
    };
    let direction: Direction = args.direction.into();
    let opts = options(&loaded, protocol)?;
    let report = run_protocol(protocol, &loaded.config.model, direction, &opts)?;

    let dir_name = (protocol == Protocol::Emission).then_some(match direction {
        Direction::Right => "right",
        Direction::Left => "left",
    });
    let files = vec![
        ("timeseries.csv", output::timeseries_csv(&report)),
        ("metrics.json", output::metrics_json(&report, dir_name)),
    ];
    let dir = out_dir(&args.common, &loaded.config);
    write_bundle(&dir, files, "run", protocol.name(), &loaded.config)?;

    let m = &report.metrics;
    println!("{} ({}): P_R = {:.9}, P_L = {:.3e}", protocol.name(), report.config.design.name(), m.p_r, m.p_l);
    for (name, value) in output_lines(m) {
        println!("  {name} = {value:.9}");
    }
    println!("bundle written to {}", dir.display());
    if let Some(v) = &report.health.violation {
        eprintln!("tolerance violation: {v}");
        return Ok(EXIT_TOLERANCE);
    }
    Ok(EXIT_OK)
}

fn output_lines(m: &crate::observables::MetricSet) -> Vec<(&'static str, f64)> {
    crate::observables::MetricSet::NAMES
        .iter()
        .zip(m.values())
        .skip(2)
        .filter_map(|(name, v)| v.map(|v| (*name, v)))
        .collect()
}

fn cmd_sweep(args: SweepArgs) -> CliResult {
    let loaded = load(&args.common)?;
    let cfg = &loaded.config;
    let which = match (args.sweep, cfg.sweep.name.as_deref()) {
        (Some(s), _) => s,
        (None, Some("eta")) => SweepArg::Eta,
        (None, Some("detuning_distance")) => SweepArg::DetuningDistance,
        (None, Some("bandwidth")) => SweepArg::Bandwidth,
        (None, Some(other)) => return Err(Failure::config(format!("unknown sweep `{other}`"))),
        (None, None) => return Err(Failure::config("no sweep selected; pass --sweep or set [sweep] name")),
    };
    let workers = args.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if workers == 0 {
        return Err(Failure::config("--workers must be at least 1"));
    }
    let (name, result) = match which {
        SweepArg::Eta => {
            let opts = ProtocolOptions { amplitudes: false, ..options(&loaded, Protocol::Emission)? };
            let grid = cfg.sweep.eta_grid.clone().unwrap_or_else(sweeps::default_eta_grid);
            ("eta", sweeps::sweep_eta(&cfg.model, &grid, &opts, workers)?)
        }
        SweepArg::DetuningDistance => {
            let opts = ProtocolOptions { amplitudes: false, ..options(&loaded, Protocol::Emission)? };
            let det = cfg.sweep.detuning_grid.clone().unwrap_or_else(sweeps::default_detuning_grid);
            let dist = cfg.sweep.distance_grid.clone().unwrap_or_else(sweeps::default_distance_grid);
            ("detuning_distance", sweeps::sweep_detuning_distance(&cfg.model, &det, &dist, &opts, workers)?)
        }
        SweepArg::Bandwidth => {
            if cfg.model.design != Design::QubitResonator {
                return Err(Failure::config("the bandwidth sweep needs the qubit_resonator design"));
            }
            let opts = options(&loaded, Protocol::Transmission)?;
            let grid = cfg.sweep.bandwidth_grid.clone().unwrap_or_else(sweeps::default_bandwidth_grid);
            ("bandwidth", sweeps::sweep_bandwidth(&cfg.model, &grid, &opts, workers)?)
        }
    };
    let files =
        vec![("sweep.csv", output::sweep_csv(&result)), ("metrics.json", output::sweep_summary_json(name, &result))];
    let dir = out_dir(&args.common, cfg);
    write_bundle(&dir, files, "sweep", name, cfg)?;
    println!("{name} sweep: {} points written to {}", result.points.len(), dir.display());
    if !result.all_healthy() {
        let bad = result.points.iter().filter(|p| !p.healthy || p.error.is_some()).count();
        eprintln!("{bad} grid points were flagged or failed");
        return Ok(EXIT_TOLERANCE);
    }
    Ok(EXIT_OK)
}

fn cmd_oracle(args: OracleArgs) -> CliResult {
    let loaded = load(&args.common)?;
    let cfg = &loaded.config;
    if cfg.model.include_ancilla {
        return Err(Error::OracleUnsupported("the amplitude equations exclude the ancilla".into()).into());
    }
    let opts = ProtocolOptions { amplitudes: false, ..options(&loaded, Protocol::Emission)? };
    let report = run_protocol(Protocol::Emission, &cfg.model, args.direction.into(), &opts)?;
    let deviation = report.oracle_deviation.unwrap_or(f64::NAN);
    println!("max flux deviation: {deviation:.6e}");
    println!("dt: {:e}", report.dt);
    if let Some(v) = &report.health.violation {
        eprintln!("tolerance violation: {v}");
        return Ok(EXIT_TOLERANCE);
    }
    if deviation <= ORACLE_TOLERANCE {
        Ok(EXIT_OK)
    } else {
        eprintln!("deviation exceeds {ORACLE_TOLERANCE:e}");
        Ok(EXIT_TOLERANCE)
    }
}
