use std::path::PathBuf;
use std::process::ExitCode;

use biorth_cli::{CliError, Config, VerifyFlags, EXIT_VERIFICATION_FAILED};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "biorth", version, about = "Biorthogonal polynomials of the two-matrix model and their Riemann-Hilbert matrix")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML problem configuration
    config: PathBuf,
    /// Overrides `output_dir` from the configuration
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for p_k and the dual rows; writes pk.csv, duals.csv, diagnostics.txt and plot data
    Compute(Common),
    /// Check the Riemann-Hilbert conditions and the oracles; writes report.txt and residuals.csv
    Verify {
        #[command(flatten)]
        common: Common,
        /// Compare against the bimoment and quadratic-W reference routes
        #[arg(long)]
        oracle: bool,
        #[arg(long)]
        jump: bool,
        #[arg(long)]
        asymptotics: bool,
        #[arg(long)]
        det: bool,
        #[arg(long)]
        zeros: bool,
        /// All checks; also the default when no check is selected
        #[arg(long)]
        all: bool,
        /// Verify the pk.csv and duals.csv in this directory instead of solving
        #[arg(long)]
        artifacts: Option<PathBuf>,
    },
    /// Dump mixed moments and bimoments; writes moments.csv and bimoments.csv
    Moments(Common),
}

fn load(common: &Common) -> Result<Config, CliError> {
    let mut cfg = Config::load(&common.config)?;
    if let Some(dir) = &common.output_dir {
        cfg.output_dir = dir.clone();
    }
    Ok(cfg)
}

fn report_files(files: &[PathBuf]) {
    for f in files {
        println!("wrote {}", f.display());
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Compute(common) => {
            report_files(&biorth_cli::compute(&load(&common)?)?);
            Ok(0)
        }
        Command::Moments(common) => {
            report_files(&biorth_cli::moments(&load(&common)?)?);
            Ok(0)
        }
        Command::Verify {
            common,
            oracle,
            jump,
            asymptotics,
            det,
            zeros,
            all,
            artifacts,
        } => {
            let flags = if all {
                VerifyFlags::ALL
            } else {
                VerifyFlags {
                    oracle,
                    jump,
                    asymptotics,
                    det,
                    zeros,
                }
                .or_all()
            };
            let outcome = biorth_cli::verify(&load(&common)?, flags, artifacts.as_deref())?;
            report_files(&outcome.files);
            if outcome.passed {
                Ok(0)
            } else {
                eprintln!("verification failed; see {}", outcome.files[0].display());
                Ok(EXIT_VERIFICATION_FAILED)
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
