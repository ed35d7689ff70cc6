//! Command-line driver: `mrflab generate|fit-mle|posterior|exact-z|report`.

mod config;
mod report;
mod runner;
mod svg;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::{
    CdSettings, DataConfig, ExperimentConfig, GridConfig, Method, ParticleConfig, ThetaGen,
};
pub use report::{
    cmd_report, read_report, runtime_table, summarize, write_report, ReportRow, RuntimeTable, SummaryRow,
};
pub use runner::{
    cmd_exact_z, cmd_fit_mle, cmd_generate, cmd_posterior, true_theta, Layout, PosteriorRun,
};
pub use svg::{line_chart, Series};

use crate::error::MrfError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "mrflab", version, about = "Bayesian inference for binary grid MRFs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum CommandKind {
    Generate,
    FitMle,
    Posterior,
    ExactZ,
    Report,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate the datasets for every replicate and sample size.
    Generate(CommonArgs),
    /// Fit theta by contrastive divergence on every dataset.
    FitMle(CommonArgs),
    /// Run the posterior chains and write report.csv.
    Posterior(CommonArgs),
    /// Print the exact log partition function at each replicate's true theta.
    ExactZ(CommonArgs),
    /// Summarize report.csv into tables and charts.
    Report(CommonArgs),
}

#[derive(Debug, clap::Args)]
struct CommonArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `out_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides both the theta generator seed and the chain seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = "MRFLAB_JOBS")]
    jobs: Option<usize>,
}

impl Command {
    fn split(self) -> (CommandKind, CommonArgs) {
        match self {
            Command::Generate(a) => (CommandKind::Generate, a),
            Command::FitMle(a) => (CommandKind::FitMle, a),
            Command::Posterior(a) => (CommandKind::Posterior, a),
            Command::ExactZ(a) => (CommandKind::ExactZ, a),
            Command::Report(a) => (CommandKind::Report, a),
        }
    }
}

fn load_config(args: &CommonArgs) -> crate::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }
    if let Some(seed) = args.seed {
        cfg.theta_gen.seed = seed;
        cfg.mh.seed = seed;
    }
    cfg.validate()?;
    if args.jobs == Some(0) {
        return Err(MrfError::Parse("--jobs must be at least 1".into()));
    }
    Ok(cfg)
}

fn execute(kind: CommandKind, cfg: &ExperimentConfig) -> crate::Result<()> {
    let layout = Layout::new(&cfg.out_dir);
    match kind {
        CommandKind::Generate => {
            let k = cmd_generate(cfg, &layout)?;
            eprintln!("wrote {k} datasets under {}", layout.root().display());
        }
        CommandKind::FitMle => {
            let k = cmd_fit_mle(cfg, &layout)?;
            eprintln!("wrote {k} estimates under {}", layout.root().display());
        }
        CommandKind::Posterior => {
            let run = cmd_posterior(cfg, &layout)?;
            eprintln!(
                "ran {} chains ({} skipped); report at {}",
                run.chains,
                run.skipped,
                layout.report().display()
            );
        }
        CommandKind::ExactZ => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            cmd_exact_z(cfg, &mut lock)?;
            lock.flush()?;
        }
        CommandKind::Report => {
            let k = cmd_report(&layout)?;
            eprintln!("summarized {k} groups into {}", layout.summary().display());
        }
    }
    Ok(())
}

/// Parse `args` (including the program name), run the subcommand and return
/// the process exit code.
pub fn run_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_CONFIG,
            };
        }
    };
    let (kind, args) = cli.command.split();
    let cfg = match load_config(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("mrflab: configuration error: {e}");
            return EXIT_CONFIG;
        }
    };
    let result = match args.jobs {
        Some(j) => match rayon::ThreadPoolBuilder::new().num_threads(j).build() {
            Ok(pool) => pool.install(|| execute(kind, &cfg)),
            Err(e) => {
                eprintln!("mrflab: cannot start {j} worker threads: {e}");
                return EXIT_RUNTIME;
            }
        },
        None => execute(kind, &cfg),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("mrflab: {e}");
            EXIT_RUNTIME
        }
    }
}

pub fn main_entry() -> i32 {
    run_with_args(std::env::args_os())
}
