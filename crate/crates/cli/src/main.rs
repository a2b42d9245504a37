//! `pmu-dse`: run and validate scenario files.
//!
//! Exit codes: 0 ok, 2 config error, 3 simulation error, 4 I/O error.
//! Log verbosity follows `RUST_LOG` (default `info`).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pmu_dse::runner::{self, exit_code, Case, RunManifest};

#[derive(Parser)]
#[command(
    name = "pmu-dse",
    version,
    about = "PMU-based generator state estimation scenarios"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate, estimate and write CSVs plus a report.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Replaces the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// 1 noisefree, 2 Gaussian, 3 Laplacian; replaces the noise kind.
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        case: Option<u8>,
        /// Only simulate; skip the observers.
        #[arg(long)]
        no_observers: bool,
    },
    /// Check a scenario file and list every problem.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            case,
            no_observers,
        } => {
            let case = case.map(|c| Case::try_from(c).expect("clap restricts the range"));
            let manifest = RunManifest {
                config,
                out,
                seed,
                case,
                observers: !no_observers,
            };
            match runner::run(&manifest) {
                Ok(report) => {
                    print!("{}", report.to_text());
                    log::info!("outputs in {}", manifest.out.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    log::error!("{e}");
                    ExitCode::from(exit_code(&e) as u8)
                }
            }
        }
        Command::Validate { config } => match runner::validate(&config) {
            Ok(diags) if diags.is_empty() => {
                println!("{}: ok", config.display());
                ExitCode::SUCCESS
            }
            Ok(diags) => {
                for d in &diags {
                    println!("{d}");
                }
                ExitCode::from(2)
            }
            Err(e) => {
                log::error!("{e}");
                ExitCode::from(exit_code(&e) as u8)
            }
        },
    }
}
