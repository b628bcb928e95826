//! Experiment runner: `penfbm <subcommand>`.
//!
//! Settings come from built-in defaults, then an optional flat TOML file
//! (`--config`), then flags. Every run writes `manifest.json` to its output
//! directory before starting and again when finished.
//!
//! Exit codes: 0 success, 1 acceptance failure, 2 configuration error,
//! 3 runtime error (budget exhausted, degenerate weights, I/O).

mod commands;
pub mod config;
pub mod manifest;

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::acceptance::Profile;
use crate::error::{Error, Result};
use crate::gaussgen::Method;
use crate::sde::DriftKind;
use crate::stats::TwoSampleStat;
pub use config::{Experiment, ExperimentConfig};
pub use manifest::{RunManifest, RunStatus, StreamRange};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ACCEPTANCE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "penfbm", version, about = "Penalized fractional Brownian motion experiments")]
pub struct Cli {
    /// Flat TOML file of experiment settings; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads (default: logical processors).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Print the columns of every output file and exit.
    #[arg(long)]
    pub schema: bool,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample fBM paths (CSV and binary block).
    SampleFbm {
        #[arg(long)]
        hurst: Option<f64>,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long, value_enum)]
        method: Option<Method>,
        #[command(flatten)]
        common: Common,
    },
    /// Estimate I(T) over several horizons and fit its decay exponent.
    Penalized {
        #[arg(long)]
        hurst: Option<f64>,
        #[arg(long = "horizon-list", value_delimiter = ',')]
        horizons: Option<Vec<f64>>,
        #[arg(long)]
        steps_per_unit: Option<usize>,
        #[arg(long)]
        count: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Persistence probability P(min B_H ≥ −1 on [0,T]) and its decay.
    Persistence {
        #[arg(long)]
        hurst: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        horizons: Option<Vec<f64>>,
        #[arg(long)]
        steps_per_unit: Option<usize>,
        #[arg(long)]
        count: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Limit-law statistics: normalizer, asymmetry, optional ensemble dump.
    Limit {
        #[arg(long)]
        hurst: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        boot: Option<usize>,
        #[arg(long)]
        ess_floor: Option<f64>,
        /// Also write the weighted ensemble as a binary block.
        #[arg(long)]
        dump: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Euler–Maruyama trajectories of one of the three drifts.
    Sde {
        #[arg(long, value_enum)]
        kind: Option<DriftKind>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        zero_noise: bool,
        /// Write only `(path_id, x1, min)`.
        #[arg(long)]
        endpoints: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate a drift on a (t, x) lattice.
    DriftTable {
        #[arg(long, value_enum)]
        kind: Option<DriftKind>,
        #[arg(long, value_delimiter = ',')]
        t_grid: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        x_grid: Option<Vec<f64>>,
        #[command(flatten)]
        common: Common,
    },
    /// Two-sample distance between marginals of two binary ensembles.
    Compare {
        #[arg(long)]
        a: Option<PathBuf>,
        #[arg(long)]
        b: Option<PathBuf>,
        #[arg(long, value_enum)]
        stat: Option<TwoSampleStat>,
        #[arg(long)]
        boot: Option<usize>,
        /// Fraction of the horizon at which the marginals are taken.
        #[arg(long)]
        time: Option<f64>,
        #[arg(long)]
        threshold: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Run the acceptance suite and write `report.json`.
    Accept {
        #[arg(long, value_enum)]
        profile: Option<Profile>,
        #[command(flatten)]
        common: Common,
    },
}

impl Command {
    pub fn experiment(&self) -> Experiment {
        match self {
            Command::SampleFbm { .. } => Experiment::SampleFbm,
            Command::Penalized { .. } => Experiment::Penalized,
            Command::Persistence { .. } => Experiment::Persistence,
            Command::Limit { .. } => Experiment::Limit,
            Command::Sde { .. } => Experiment::Sde,
            Command::DriftTable { .. } => Experiment::DriftTable,
            Command::Compare { .. } => Experiment::Compare,
            Command::Accept { .. } => Experiment::Accept,
        }
    }

    /// The settings given as flags.
    pub fn flags(&self) -> ExperimentConfig {
        let flag = |set: bool| set.then_some(true);
        let mut c = ExperimentConfig::default();
        let common = match self {
            Command::SampleFbm { hurst, horizon, steps, count, method, common } => {
                (c.hurst, c.horizon, c.steps, c.count, c.method) = (*hurst, *horizon, *steps, *count, *method);
                common
            }
            Command::Penalized { hurst, horizons, steps_per_unit, count, common }
            | Command::Persistence { hurst, horizons, steps_per_unit, count, common } => {
                (c.hurst, c.horizons, c.steps_per_unit, c.count) = (*hurst, horizons.clone(), *steps_per_unit, *count);
                common
            }
            Command::Limit { hurst, steps, count, boot, ess_floor, dump, common } => {
                (c.hurst, c.steps, c.count, c.boot, c.ess_floor) = (*hurst, *steps, *count, *boot, *ess_floor);
                c.dump = flag(*dump);
                common
            }
            Command::Sde { kind, dt, count, zero_noise, endpoints, common } => {
                (c.kind, c.dt, c.count) = (*kind, *dt, *count);
                c.zero_noise = flag(*zero_noise);
                c.endpoints = flag(*endpoints);
                common
            }
            Command::DriftTable { kind, t_grid, x_grid, common } => {
                (c.kind, c.t_grid, c.x_grid) = (*kind, t_grid.clone(), x_grid.clone());
                common
            }
            Command::Compare { a, b, stat, boot, time, threshold, common } => {
                (c.a, c.b, c.stat, c.boot, c.time, c.threshold) =
                    (a.clone(), b.clone(), *stat, *boot, *time, *threshold);
                common
            }
            Command::Accept { profile, common } => {
                c.profile = *profile;
                common
            }
        };
        c.seed = common.seed;
        c.out_dir = common.out.clone();
        c
    }
}

/// Exit code for an error raised during a run.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::ConfigInvalid { .. } | Error::InvalidParameter { .. } | Error::Format { .. } => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn run_cli<I, T>(args: I) -> i32
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
    if cli.schema {
        print!("{}", commands::SCHEMA);
        return EXIT_OK;
    }
    let Some(command) = &cli.command else {
        eprintln!("error: a subcommand is required (see --help)");
        return EXIT_CONFIG;
    };
    match execute(&cli, command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Resolve the layered configuration of `command`.
pub fn resolve_config(cli: &Cli, command: &Command) -> Result<ExperimentConfig> {
    let experiment = command.experiment();
    let file = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(e) = file.experiment {
        if e != experiment {
            return Err(Error::config(
                "experiment",
                format!("file is for `{}`, command is `{}`", e.name(), experiment.name()),
            ));
        }
    }
    let mut flags = command.flags();
    flags.threads = cli.threads;
    Ok(file.overlay(&flags).with_defaults(experiment))
}

fn execute(cli: &Cli, command: &Command) -> Result<i32> {
    let cfg = resolve_config(cli, command)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::config("threads", e.to_string()))?;
    let dir = cfg.out_dir();
    let mut manifest = RunManifest::start(cfg.clone(), pool.current_num_threads());
    manifest.write(&dir)?;
    let started = Instant::now();
    let outcome = pool.install(|| commands::run(&cfg, &dir));
    manifest.wall_time_seconds = Some(started.elapsed().as_secs_f64());
    let code = match outcome {
        Ok(out) => {
            manifest.streams = out.streams;
            manifest.outputs = out
                .files
                .iter()
                .map(|f| manifest::digest_file(&dir, f))
                .collect::<Result<_>>()?;
            manifest.status = RunStatus::Complete;
            Ok(out.code)
        }
        Err(e) => {
            manifest.status = RunStatus::Failed;
            manifest.error = Some(e.to_string());
            Err(e)
        }
    };
    manifest.exit_code = Some(match &code {
        Ok(c) => *c,
        Err(e) => exit_code(e),
    });
    manifest.write(&dir)?;
    code
}
