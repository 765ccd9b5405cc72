//! `brachisto`: geometric phases, brachistophase hamiltonians and Majorana
//! constellations from the command line.

mod commands;
mod config;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use crate::commands::Status;
use crate::config::{Command, Options, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "brachisto", version, about = "Geometric phase and brachistophase toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    options: Options,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical breakdown: {m}"),
            CliError::Io(m) => write!(f, "output error: {m}"),
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("BRACHISTO_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("BRACHISTO_THREADS='{v}' is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Config(e.to_string()))
}

fn run(cli: &Cli) -> Result<Status, CliError> {
    configure_threads()?;
    let cfg = RunConfig::from_options(cli.command, &cli.options)?;
    let output = match cfg.command {
        Command::Phase => commands::phase(&cfg)?,
        Command::Optimize => commands::optimize(&cfg)?,
        Command::Constellation => commands::constellation(&cfg)?,
        Command::Verify => commands::verify(&cfg)?,
    };
    let text = output.render(&cfg);
    match &cfg.out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?,
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string()))?,
    }
    Ok(output.status)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::InvariantFailure) => {
            eprintln!("one or more invariants failed");
            ExitCode::from(1)
        }
        Ok(Status::Breakdown) => {
            eprintln!("numerical breakdown: phase undefined at some grid nodes");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
