//! `qcoord`: batch front end for rate evaluation, optimization, simulation,
//! derandomization and converse checks.

mod artifacts;
mod commands;
mod experiment;
mod failure;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::Parser;

use artifacts::Manifest;
use commands::Console;
use experiment::{Command, Experiment};
use failure::{Failure, Kind, Outcome};

#[derive(Debug, Parser)]
#[command(
    name = "qcoord",
    version,
    about = "Empirical coordination rates and protocol simulation"
)]
struct Cli {
    /// Command to run; must match the config's `command` field if given.
    #[arg(value_parser = parse_command)]
    command: Option<Command>,
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config's `out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed; overrides the config's `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads, 0 for one per core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Suppress progress output.
    #[arg(long)]
    quiet: bool,
}

fn parse_command(s: &str) -> Result<Command, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| "expected one of rate, optimize, simulate, derandomize, converse, sweep".to_string())
}

fn execute(cli: &Cli) -> Outcome<()> {
    let started = Instant::now();
    let started_unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let exp = Experiment::load(&cli.config, cli.seed)?;
    if let Some(c) = cli.command {
        if c != exp.config.command {
            return Err(Failure::parse(format!(
                "command `{}` does not match the config's `{}`",
                serde_json::to_value(c).unwrap_or_default(),
                serde_json::to_value(exp.config.command).unwrap_or_default()
            )));
        }
    }
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| Failure::new(Kind::Io, format!("thread pool: {e}")))?;
    }
    let console = Console { quiet: cli.quiet };
    let out = cli
        .out
        .clone()
        .or_else(|| exp.config.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"));

    let artifacts = commands::run(&exp, &console)?;
    if artifacts.is_empty() {
        return Ok(());
    }
    let manifest = Manifest {
        schema: "qcoord.manifest/1",
        command: serde_json::to_value(exp.config.command)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default(),
        config_path: cli.config.display().to_string(),
        config_hash: exp.hash.clone(),
        library_version: qcoord::VERSION,
        cli_version: env!("CARGO_PKG_VERSION"),
        seeds: Vec::new(),
        threads: rayon::current_num_threads(),
        started_unix_seconds: started_unix,
        wall_time_seconds: started.elapsed().as_secs_f64(),
        artifacts: Vec::new(),
    };
    let written = artifacts.write(&out, manifest)?;
    for p in written {
        console.say(format!("wrote {}", p.display()));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.to_json());
            ExitCode::from(f.kind.exit_code() as u8)
        }
    }
}
