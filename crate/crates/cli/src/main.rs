use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sgfem_cli::{parse, run_file, RunError, RunOptions};

#[derive(Parser)]
#[command(name = "sgfem", about = "Stochastic nonlinear finite-element analysis of reinforced-concrete plane stress")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Runs the analyses of a TOML configuration.
    Run {
        config: PathBuf,
        /// Worker threads; defaults to all cores.
        #[arg(long)]
        workers: Option<usize>,
        /// Overrides the configured output directory.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Uses the long Monte Carlo sample count.
        #[arg(long)]
        long: bool,
    },
    /// Checks a configuration without running it.
    Validate { config: PathBuf },
    Version,
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run {
            config,
            workers,
            output_dir,
            long,
        } => {
            let options = RunOptions {
                output_dir,
                long,
                workers,
            };
            match run_file(&config, &options) {
                Ok(summary) => {
                    for f in &summary.files {
                        println!("{}", f.display());
                    }
                    if summary.failures.is_empty() {
                        ExitCode::SUCCESS
                    } else {
                        for f in &summary.failures {
                            eprintln!("failure: {f}");
                        }
                        ExitCode::from(3)
                    }
                }
                Err(e) => fail(e),
            }
        }
        Command::Validate { config } => {
            let checked = std::fs::read_to_string(&config)
                .map_err(|e| format!("cannot read {}: {e}", config.display()))
                .and_then(|text| {
                    let c = parse(&text).map_err(|e| e.to_string())?;
                    c.build().map_err(|e| e.to_string())?;
                    Ok(())
                });
            match checked {
                Ok(()) => {
                    println!("ok");
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("{e}");
                    ExitCode::from(2)
                }
            }
        }
        Command::Version => {
            println!("sgfem {}", env!("CARGO_PKG_VERSION"));
            ExitCode::SUCCESS
        }
    }
}

fn fail(e: RunError) -> ExitCode {
    eprintln!("{e}");
    ExitCode::from(e.exit_code() as u8)
}
