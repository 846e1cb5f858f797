//! `freelln` command-line tool.

mod commands;
mod table;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// S-transforms, limit laws and the μ(α, β) family from the command line.
#[derive(Debug, Parser)]
#[command(name = "freelln", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Density of μ(α, β) on a grid of x values.
    Density {
        #[command(flatten)]
        family: FamilyArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// CDF of the limit law ν on a grid of x values.
    CdfLimit {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// χ(z) and S(z) on a grid over the domain of S.
    Transforms {
        #[command(flatten)]
        source: SourceArgs,
        /// Number of grid points.
        #[arg(long, default_value_t = 100)]
        points: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Fractional moment ∫ x^γ dμ.
    Moments {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, allow_negative_numbers = true)]
        gamma: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// E ln x, ρ and the log-variances of a measure.
    Logstats {
        #[command(flatten)]
        source: SourceArgs,
        /// Also report V ln x under the n-fold product.
        #[arg(long)]
        n: Option<u32>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Random-matrix product spectra (CSV) or a convergence report (JSON).
    McProduct {
        #[command(flatten)]
        source: SourceArgs,
        /// Number of factors.
        #[arg(long, default_value_t = 4)]
        n: u32,
        /// Matrix dimension.
        #[arg(long, default_value_t = 256)]
        dim: usize,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run a verification suite and emit a pass/fail report.
    Verify {
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Args)]
struct FamilyArgs {
    #[arg(long, allow_negative_numbers = true)]
    alpha: f64,
    #[arg(long, allow_negative_numbers = true)]
    beta: f64,
}

/// Either --alpha and --beta, or --measure.
#[derive(Debug, Args)]
struct SourceArgs {
    #[arg(long, allow_negative_numbers = true, requires = "beta", conflicts_with = "measure")]
    alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true, requires = "alpha", conflicts_with = "measure")]
    beta: Option<f64>,
    /// JSON file describing a measure.
    #[arg(long, value_name = "PATH", required_unless_present = "alpha")]
    measure: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GridArgs {
    #[arg(long, default_value_t = 100)]
    points: usize,
    #[arg(long, allow_negative_numbers = true)]
    xmin: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    xmax: Option<f64>,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Write to this file instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    Transforms,
    Limitlaw,
    Family,
    Mc,
    All,
}

/// Why a run did not succeed, mapped onto the exit status.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Domain(String),
    Verify(Vec<String>),
}

impl From<freelln::Error> for Failure {
    fn from(e: freelln::Error) -> Self {
        Failure::Domain(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Domain(format!("i/o error: {e}"))
    }
}

const EXIT_DOMAIN: u8 = 1;
const EXIT_VERIFY: u8 = 2;
const EXIT_USAGE: u8 = 64;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\nFor more information, try '--help'.");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_DOMAIN)
        }
        Err(Failure::Verify(tags)) => {
            eprintln!("verification failed: {}", tags.join(", "));
            ExitCode::from(EXIT_VERIFY)
        }
    }
}
