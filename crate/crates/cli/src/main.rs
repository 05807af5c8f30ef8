//! `ymtg`: simulate, gauge-fix, estimate verification and norm reports.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ymtg::Error;

#[derive(Debug, Parser)]
#[command(name = "ymtg", version, about = "Yang-Mills temporal-gauge laboratory on the 3-torus")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evolve small data and write diagnostics.
    Simulate(SimulateArgs),
    /// Iterate towards the Coulomb gauge and write the residual history.
    GaugeFix(GaugeArgs),
    /// Sample estimate ratios over an ensemble and write a JSON report.
    VerifyEstimates(EstimateArgs),
    /// Sobolev norms and split diagnostics of a checkpoint.
    Norms(NormsArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub s: Option<f64>,
    /// `rk4` or `picard`.
    #[arg(long)]
    pub scheme: Option<String>,
    #[arg(long)]
    pub diag_stride: Option<usize>,
    /// `su2`, `abelian:K` or a structure-tensor file.
    #[arg(long)]
    pub algebra: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Initial data checkpoint (a field `A(0)` or a full state).
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Diagnostics report (`.csv` or `.json`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Final (or last valid) state checkpoint.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GaugeArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub algebra: Option<String>,
    /// `H^s` norm of random input data.
    #[arg(long)]
    pub amplitude: Option<f64>,
    #[arg(long)]
    pub s: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Input field checkpoint instead of random data.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Residual history CSV (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Checkpoint of the gauge-fixed field.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma-separated case ids, e.g. `energy,cnd,bilinear_strichartz(0.2)`.
    #[arg(long)]
    pub cases: Option<String>,
    /// Comma-separated grid sizes.
    #[arg(long)]
    pub grids: Option<String>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// free-wave, cone-concentrated, random-band, plane-wave-pair or curlfree-timeband.
    #[arg(long)]
    pub ensemble: Option<String>,
    #[arg(long)]
    pub s: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct NormsArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Comma-separated Sobolev exponents.
    #[arg(long)]
    pub s: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Exit code and tag of an error.
fn classify(e: &Error) -> (u8, &'static str) {
    match e {
        Error::InvalidInput(_) | Error::Configuration(_) | Error::Precondition(_) => (2, "CONFIG"),
        Error::BlowUp { .. } => (3, "BLOWUP"),
        Error::Numerical(_)
        | Error::NonConvergence { .. }
        | Error::NonContraction { .. }
        | Error::Integrity { .. } => (3, "NUMERICAL"),
        Error::Io(_) | Error::DataCorruption(_) | Error::UnsupportedVersion(_) => (4, "IO"),
    }
}

fn one_line(msg: impl std::fmt::Display) -> String {
    msg.to_string().split_whitespace().collect::<Vec<_>>().join(" ")
}

fn configure_threads() -> Result<(), Error> {
    let Ok(v) = std::env::var("YMTG_THREADS") else {
        return Ok(());
    };
    let k: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|k| *k >= 1)
        .ok_or_else(|| Error::Configuration(format!("YMTG_THREADS must be a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(k)
        .build_global()
        .map_err(|e| Error::Configuration(format!("cannot size the worker pool: {e}")))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let first = e.to_string();
            let first = first.lines().next().unwrap_or("bad arguments").trim_start_matches("error: ");
            eprintln!("error[CONFIG]: {}", one_line(first));
            return ExitCode::from(2);
        }
    };
    let result = configure_threads().and_then(|_| match cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::GaugeFix(a) => commands::gauge_fix(a),
        Command::VerifyEstimates(a) => commands::verify_estimates(a),
        Command::Norms(a) => commands::norms(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (code, tag) = classify(&e);
            eprintln!("error[{tag}]: {}", one_line(&e));
            ExitCode::from(code)
        }
    }
}
