//! `bundleopt` command-line driver: smoothing diagnostics, contact-model
//! probes and trajectory-optimization comparisons written as CSV tables.

mod commands;
mod config;
mod error;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{BundleEvalConfig, ContactProbeConfig, PlanConfig};
use crate::error::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "bundleopt", version, about = "Randomized-smoothing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep a test function and compare bundle estimators with quadrature.
    BundleEval(Common),
    /// Run bundled iterative LQR on a task for several modes and seeds.
    Plan {
        #[command(flatten)]
        common: Common,
        /// Also write per-run wall-clock times to timing.csv.
        #[arg(long)]
        timing: bool,
    },
    /// Tabulate exact, relaxed and bundled planar contact dynamics.
    ContactProbe(Common),
}

#[derive(Args)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the seed of the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (defaults to the number of cores).
    #[arg(long)]
    jobs: Option<usize>,
}

impl Common {
    fn prepare(&self) -> CliResult<()> {
        if let Some(jobs) = self.jobs {
            if jobs == 0 {
                return Err(CliError::Config("--jobs must be at least 1".into()));
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build_global()
                .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
        }
        output::ensure_dir(&self.out)
    }
}

fn finish<C: serde::Serialize>(out: &Path, name: &str, seeds: &[u64], cfg: &C, files: Vec<PathBuf>) -> CliResult<()> {
    output::write_manifest(out, name, seeds, cfg, &files)?;
    for f in &files {
        log::info!("wrote {}", f.display());
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::BundleEval(common) => {
            let mut cfg: BundleEvalConfig = config::load(&common.config)?;
            if let Some(seed) = common.seed {
                cfg.seed = seed;
            }
            cfg.validate()?;
            common.prepare()?;
            let files = commands::bundle_eval::run(&cfg, &common.out)?;
            finish(&common.out, "bundle-eval", &[cfg.seed], &cfg, files)
        }
        Command::Plan { common, timing } => {
            let mut cfg: PlanConfig = config::load(&common.config)?;
            if let Some(seed) = common.seed {
                cfg.seed = seed;
            }
            cfg.validate()?;
            common.prepare()?;
            let files = commands::plan::run(&cfg, &common.out, timing)?;
            finish(&common.out, "plan", &cfg.seeds(), &cfg, files)
        }
        Command::ContactProbe(common) => {
            let mut cfg: ContactProbeConfig = config::load(&common.config)?;
            if let Some(seed) = common.seed {
                cfg.seed = seed;
            }
            cfg.validate()?;
            common.prepare()?;
            let files = commands::contact_probe::run(&cfg, &common.out)?;
            finish(&common.out, "contact-probe", &[cfg.seed], &cfg, files)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("BUNDLEOPT_LOG", "error")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
