//! Command-line front end: configuration, scenario runs and dataset output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod output;
pub mod range;
pub mod run;

use std::ffi::OsString;
use std::path::PathBuf;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};

use crate::config::ScenarioConfig;
use crate::range::{BinList, StepRange};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

/// Caps the worker threads used for independent scan points.
pub const THREADS_ENV: &str = "FREQBIN_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "freqbin",
    version,
    about = "Frequency-bin entanglement: analytic curves, simulated counts and Bell tests"
)]
pub struct Cli {
    /// Scenario configuration (JSON). Apparatus defaults when absent.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Base seed of every random stream.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sideband weights of one modulator.
    Spectrum {
        #[arg(long)]
        amplitude: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        phase: Option<f64>,
        #[arg(long)]
        max_order: Option<usize>,
    },
    /// Q(d) against a = b at fixed Δ: analytic curve and simulated points.
    ScanAmplitude {
        /// Bin offsets, e.g. `0..5` or `0,2,4`.
        #[arg(long, allow_hyphen_values = true)]
        d: Option<BinList>,
        /// Simulated amplitudes as `start:stop:step`.
        #[arg(long)]
        amplitudes: Option<StepRange>,
        #[arg(long, allow_negative_numbers = true)]
        delta: Option<f64>,
        #[arg(long)]
        budget: Option<f64>,
    },
    /// Q(d) against Δ at fixed a = b: analytic curve and simulated points.
    ScanPhase {
        #[arg(long, allow_hyphen_values = true)]
        d: Option<BinList>,
        #[arg(long)]
        amplitude: Option<f64>,
        /// Simulated phases over [0, 2π].
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        budget: Option<f64>,
    },
    /// Fringe visibility of the d = 0 rate, analytic and simulated.
    Visibility {
        /// Sets both a and b.
        #[arg(long)]
        amplitude: Option<f64>,
        #[arg(long)]
        a: Option<f64>,
        #[arg(long)]
        b: Option<f64>,
        #[arg(long)]
        budget: Option<f64>,
    },
    /// Optimal phases, worst case and simulated significance at one amplitude.
    BellOptimize {
        #[arg(long)]
        amplitude: Option<f64>,
        #[arg(long)]
        restarts: Option<usize>,
        /// Skip the simulated run.
        #[arg(long)]
        no_simulate: bool,
    },
    /// Nominal, worst-case and simulated S over a range of amplitudes.
    BellScan {
        /// Amplitudes as `start:stop:step`.
        #[arg(long)]
        amplitudes: Option<StepRange>,
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long)]
        no_simulate: bool,
    },
    /// One raw TDC histogram and its estimate of Q.
    Simulate {
        #[arg(long)]
        a: Option<f64>,
        #[arg(long)]
        b: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        delta: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        d: Option<i32>,
        #[arg(long)]
        budget: Option<f64>,
    },
    /// Prints the effective configuration as JSON.
    Config,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Spectrum { .. } => "spectrum",
            Command::ScanAmplitude { .. } => "scan-amplitude",
            Command::ScanPhase { .. } => "scan-phase",
            Command::Visibility { .. } => "visibility",
            Command::BellOptimize { .. } => "bell-optimize",
            Command::BellScan { .. } => "bell-scan",
            Command::Simulate { .. } => "simulate",
            Command::Config => "config",
        }
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

/// Applies command-line overrides on top of the loaded configuration.
pub fn apply_overrides(config: &mut ScenarioConfig, cli: &Cli) {
    set(&mut config.seed, cli.seed);
    match &cli.command {
        Command::Spectrum {
            amplitude,
            phase,
            max_order,
        } => {
            let s = &mut config.spectrum;
            set(&mut s.amplitude, *amplitude);
            set(&mut s.rf_phase, *phase);
            if max_order.is_some() {
                s.max_order = *max_order;
            }
        }
        Command::ScanAmplitude {
            d,
            amplitudes,
            delta,
            budget,
        } => {
            let s = &mut config.scan_amplitude;
            set(&mut s.d, d.clone().map(|l| l.0));
            set(&mut s.amplitudes, *amplitudes);
            set(&mut s.delta, *delta);
            set(&mut s.budget, *budget);
        }
        Command::ScanPhase {
            d,
            amplitude,
            points,
            budget,
        } => {
            let s = &mut config.scan_phase;
            set(&mut s.d, d.clone().map(|l| l.0));
            set(&mut s.amplitude, *amplitude);
            set(&mut s.points, *points);
            set(&mut s.budget, *budget);
        }
        Command::Visibility {
            amplitude,
            a,
            b,
            budget,
        } => {
            let s = &mut config.visibility;
            set(&mut s.a, *amplitude);
            set(&mut s.b, *amplitude);
            set(&mut s.a, *a);
            set(&mut s.b, *b);
            set(&mut s.budget, *budget);
        }
        Command::BellOptimize {
            amplitude,
            restarts,
            no_simulate,
        } => {
            let s = &mut config.bell;
            set(&mut s.amplitude, *amplitude);
            set(&mut s.restarts, *restarts);
            s.simulate &= !no_simulate;
        }
        Command::BellScan {
            amplitudes,
            restarts,
            no_simulate,
        } => {
            let s = &mut config.bell;
            set(&mut s.amplitudes, *amplitudes);
            set(&mut s.restarts, *restarts);
            s.simulate &= !no_simulate;
        }
        Command::Simulate {
            a,
            b,
            delta,
            d,
            budget,
        } => {
            let s = &mut config.simulate;
            set(&mut s.a, *a);
            set(&mut s.b, *b);
            set(&mut s.delta, *delta);
            set(&mut s.d, *d);
            set(&mut s.budget, *budget);
        }
        Command::Config => {}
    }
}

/// Either kind of failure, mapped to its exit code.
#[derive(Debug)]
pub enum Failure {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

fn thread_pool() -> anyhow::Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(value) = std::env::var(THREADS_ENV) {
        let n: usize = value
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| anyhow!("{THREADS_ENV} must be a positive integer, got {value:?}"))?;
        builder = builder.num_threads(n);
    }
    builder.build().context("cannot start worker threads")
}

/// Resolves the configuration and runs the command.
pub fn execute(cli: &Cli) -> Result<Option<PathBuf>, Failure> {
    let mut config = match &cli.config {
        Some(path) => ScenarioConfig::load(path).map_err(Failure::Config)?,
        None => ScenarioConfig::default(),
    };
    apply_overrides(&mut config, cli);
    config.validate().map_err(Failure::Config)?;
    let pool = thread_pool().map_err(Failure::Config)?;

    let runner = match cli.command {
        Command::Spectrum { .. } => run::spectrum,
        Command::ScanAmplitude { .. } => run::scan_amplitude,
        Command::ScanPhase { .. } => run::scan_phase,
        Command::Visibility { .. } => run::visibility_command,
        Command::BellOptimize { .. } => run::bell_optimize,
        Command::BellScan { .. } => run::bell_scan,
        Command::Simulate { .. } => run::simulate,
        Command::Config => {
            println!("{}", config.to_json());
            return Ok(None);
        }
    };
    let result = pool.install(|| runner(&config)).map_err(Failure::Runtime)?;
    output::write_run(
        &cli.out,
        cli.command.name(),
        &config,
        &result.datasets,
        result.summary,
    )
    .map(Some)
    .map_err(Failure::Runtime)
}

/// Entry point shared by the binary and the tests; returns the exit code.
pub fn run_command<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(Some(manifest)) => {
            eprintln!("wrote {}", manifest.display());
            EXIT_OK
        }
        Ok(None) => EXIT_OK,
        Err(failure) => {
            let (kind, err) = match &failure {
                Failure::Config(e) => ("configuration error", e),
                Failure::Runtime(e) => ("runtime error", e),
            };
            eprintln!("freqbin: {kind}: {err:#}");
            failure.exit_code()
        }
    }
}
