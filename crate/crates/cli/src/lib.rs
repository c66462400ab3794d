//! Command-line front end for the noncolliding random walk library.
//!
//! Exit codes: 0 on success, 2 for usage errors, 1 for numerical failures
//! (including a failing `selftest`).

pub mod checks;
pub mod commands;
pub mod config;
pub mod format;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use config::{GlobalFlags, OutputFormat, RunConfig, CONFIG_ENV};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Numerical(ncrw::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{failed} of {total} checks failed")]
    SelftestFailed { failed: usize, total: usize },
}

impl From<ncrw::Error> for CliError {
    fn from(e: ncrw::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e)
        } else {
            CliError::Usage(e.to_string())
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(_) | CliError::Io(_) | CliError::SelftestFailed { .. } => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "ncrw", version, about = "Kernels, correlations and simulations of noncolliding random walks")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Lattice sums stop below this weight.
    #[arg(long, global = true)]
    pub tol_tail: Option<f64>,
    /// Quadrature refinement stops below this relative change.
    #[arg(long, global = true)]
    pub tol_quad: Option<f64>,
    /// Worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Base seed for simulations.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output format: csv or json.
    #[arg(long, global = true)]
    pub output: Option<OutputFormat>,
    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate one kernel value, or a grid of them.
    Kernel(commands::KernelArgs),
    /// Density profile at one time.
    Density(commands::DensityArgs),
    /// Correlation function at a multi-time point set.
    Correlation(commands::CorrelationArgs),
    /// Monte Carlo estimate of a correlation function.
    Simulate(commands::SimulateArgs),
    /// Gap between the lattice kernel and its stationary limit.
    Relaxation(commands::RelaxationArgs),
    /// Run the built-in consistency checks.
    Selftest,
}

/// Parses `argv` (including the program name), runs the command and writes
/// diagnostics to `stderr`. Returns the process exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(stderr, "{e}");
                return 2;
            }
            let _ = write!(stdout, "{e}");
            return 0;
        }
    };
    let config_path = std::env::var_os(CONFIG_ENV).map(PathBuf::from);
    match execute(cli, config_path, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: Cli, config_path: Option<PathBuf>, stdout: &mut dyn Write) -> Result<(), CliError> {
    let g = cli.global;
    let flags = GlobalFlags {
        tol_tail: g.tol_tail,
        tol_quad: g.tol_quad,
        threads: g.threads,
        seed: g.seed,
        output: g.output,
        out: g.out,
    };
    let config = RunConfig::resolve(&flags, config_path.as_deref())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| CliError::Usage(format!("--threads: {e}")))?;
    let output = pool.install(|| commands::dispatch(&cli.command, &config))?;
    match &config.out {
        Some(path) => std::fs::write(path, &output.text)?,
        None => stdout.write_all(output.text.as_bytes())?,
    }
    match output.failed {
        Some((failed, total)) => Err(CliError::SelftestFailed { failed, total }),
        None => Ok(()),
    }
}
