mod report;
mod run;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use spinorcalc::EquationId;

use crate::run::{Failure, Overrides};

#[derive(Parser)]
#[command(name = "spinorcalc", version, about = "Residual checks for spinor and Clifford-form identities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and print its JSON report.
    Run {
        file: PathBuf,
        /// Override the number of sample points.
        #[arg(long)]
        points: Option<usize>,
        /// Override the sampling seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Multiply every tolerance, preconditions included.
        #[arg(long, default_value_t = 1.0)]
        tolerance_scale: f64,
    },
    /// Certify the curvature of a backend (a backend file or a scenario).
    Certify { file: PathBuf },
    /// List equation identifiers with their formulas.
    ListEquations,
}

fn read(path: &PathBuf) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Schema(format!("{}: {e}", path.display())))
}

fn execute(cli: Cli) -> Result<bool, Failure> {
    match cli.command {
        Command::Run {
            file,
            points,
            seed,
            tolerance_scale,
        } => {
            let scenario = run::parse_scenario(&read(&file)?)?;
            let report = run::run(
                &scenario,
                Overrides {
                    points,
                    seed,
                    tolerance_scale,
                },
            )?;
            print!("{}", report::to_json(&report));
            Ok(report.passed)
        }
        Command::Certify { file } => {
            let (geom, _, pts) = run::parse_backend(&read(&file)?)?;
            let cert = run::certification(&geom, pts.count, pts.seed)?;
            print!("{}", report::to_json(&cert));
            Ok(cert.passed)
        }
        Command::ListEquations => {
            for id in EquationId::ALL {
                println!("{:<30} {}", id.name(), id.formula());
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => {
            eprintln!("{f}");
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
