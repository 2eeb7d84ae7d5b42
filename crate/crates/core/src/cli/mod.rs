//! Batch front-end: strict configs, experiment dispatch, manifests and the
//! `verify-all` suite.

pub mod config;
pub mod manifest;
mod run;
mod suite;

pub use config::{ConfigError, ExperimentConfig, ExperimentKind, Trend};
pub use manifest::{cited_hash, CheckResult, Manifest};
pub use run::{
    run, sample_points, write_error_record, CliError, RunReport, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_NUMERIC, EXIT_PASS,
};
pub use suite::{verify_all, Profile, SuiteReport};

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "bergman", version, about = "Bergman-geometry experiments on model domains")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Kernel diagonal table.
    Kernel(RunArgs),
    /// Metric tensor table.
    Metric(RunArgs),
    /// Bergman distance table.
    Distance(RunArgs),
    /// Stability-chain verification along a scaling sequence.
    Scale(RunArgs),
    /// Fridman boundary-limit experiment.
    Fridman(RunArgs),
    /// Fridman localization experiment.
    Localize(RunArgs),
    /// Hahn-Lu comparison with the Carathéodory distance.
    Hahnlu(RunArgs),
    /// Fixed suite of experiments with deterministic outputs.
    VerifyAll(SuiteArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML experiment configuration.
    #[arg(short, long)]
    pub config: PathBuf,
    /// Overrides the configured output directory.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the configured worker count.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SuiteArgs {
    #[arg(short, long, default_value = "verify-all")]
    pub output: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Profile::Quick)]
    pub profile: Profile,
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
}

impl Command {
    fn experiment(&self) -> Option<(ExperimentKind, &RunArgs)> {
        Some(match self {
            Command::Kernel(a) => (ExperimentKind::KernelTable, a),
            Command::Metric(a) => (ExperimentKind::MetricTable, a),
            Command::Distance(a) => (ExperimentKind::DistanceTable, a),
            Command::Scale(a) => (ExperimentKind::ScaleVerify, a),
            Command::Fridman(a) => (ExperimentKind::FridmanLimit, a),
            Command::Localize(a) => (ExperimentKind::Localization, a),
            Command::Hahnlu(a) => (ExperimentKind::HahnLu, a),
            Command::VerifyAll(_) => return None,
        })
    }
}

fn load(args: &RunArgs, kind: ExperimentKind) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    match cfg.kind {
        Some(k) if k != kind => {
            return Err(ConfigError {
                key: Some("kind".into()),
                message: format!("config declares `{}` but the subcommand runs `{}`", k.tag(), kind.tag()),
            }
            .into())
        }
        _ => cfg.kind = Some(kind),
    }
    if let Some(o) = &args.output {
        cfg.output = o.clone();
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(w) = args.workers {
        cfg.workers = w;
    }
    Ok(cfg)
}

/// Runs a parsed command and returns the process exit code. Error records
/// go to stderr as one JSON line.
pub fn dispatch(cli: Cli) -> i32 {
    let (result, out_dir) = match &cli.command {
        Command::VerifyAll(a) => {
            let r = verify_all(&a.output, a.seed, a.profile, a.workers);
            (r.map(|s| {
                print!("{}", s.summary());
                s.exit_code()
            }), a.output.clone())
        }
        cmd => {
            let (kind, args) = cmd.experiment().expect("experiment subcommand");
            let cfg = load(args, kind);
            let dir = cfg.as_ref().map(|c| c.output.clone()).unwrap_or_else(|_| args.output.clone().unwrap_or_default());
            (cfg.and_then(|c| run(&c)).map(|r| {
                for c in &r.checks {
                    println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                }
                r.exit_code()
            }), dir)
        }
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", e.to_json());
            if !out_dir.as_os_str().is_empty() {
                write_error_record(&out_dir, &e);
            }
            e.code
        }
    }
}

/// Entry point for the binary: parses `args` and dispatches. Usage errors
/// map to the config exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => dispatch(cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_PASS };
            let _ = e.print();
            code
        }
    }
}
