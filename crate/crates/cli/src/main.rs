mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Context, Failure};
use config::{RawConfig, RunConfig};

/// Surfaces in CP² : invariants, frames, loop-group construction, Gauss maps.
#[derive(Parser, Debug)]
#[command(name = "cp2geom", version)]
struct Cli {
    /// Config file (`key = value` lines under `[section]` headers).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Seed for randomized checks.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Invariant CSVs and integrability residuals of a catalog surface.
    Analyze { overrides: Vec<String> },
    /// Loop-group construction from a holomorphic potential.
    Construct { overrides: Vec<String> },
    /// Primitivity flags and Gauss-map report.
    Classify { overrides: Vec<String> },
    /// OBJ mesh of a catalog surface.
    Export { overrides: Vec<String> },
    /// Potential or frame round trip.
    Roundtrip { overrides: Vec<String> },
}

fn load(cli: &Cli, overrides: &[String]) -> Result<RunConfig, Failure> {
    let mut raw = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;
            RawConfig::parse(&text)
                .map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?
        }
        None => RawConfig::default(),
    };
    for o in overrides {
        raw.apply_override(o)
            .map_err(|e| Failure::Validation(e.to_string()))?;
    }
    RunConfig::resolve(&raw, cli.config.is_some()).map_err(|e| Failure::Validation(e.to_string()))
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| Failure::Validation(e.to_string()))?;
    }
    let (overrides, action): (&[String], fn(&Context) -> Result<(), Failure>) = match &cli.command {
        Command::Analyze { overrides } => (overrides, commands::analyze),
        Command::Construct { overrides } => (overrides, commands::construct),
        Command::Classify { overrides } => (overrides, commands::classify),
        Command::Export { overrides } => (overrides, commands::export),
        Command::Roundtrip { overrides } => (overrides, commands::roundtrip),
    };
    let config = load(cli, overrides)?;
    action(&Context {
        config,
        out: cli.out.clone(),
        seed: cli.seed,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (kind, msg) = match &f {
                Failure::Validation(m) => ("validation error", m),
                Failure::Numerical(m) => ("numerical failure", m),
            };
            eprintln!("cp2geom: {kind}: {msg}");
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
