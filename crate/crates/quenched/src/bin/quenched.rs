use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use quenched::cli::{run, Command};
use quenched::config::Config;

#[derive(Clone, Copy, ValueEnum)]
enum Cmd {
    RpfCheck,
    Moments,
    Rates,
    Edgeworth,
    CltRate,
    DecayCheck,
}

/// Quenched limit-theorem experiments for random operator cocycles.
#[derive(Parser)]
#[command(version)]
struct Args {
    #[arg(value_enum)]
    command: Cmd,
    /// sectioned key = value file; defaults apply to missing keys
    #[arg(long)]
    config: Option<PathBuf>,
    /// overrides [run] seed
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// worker threads (default: available parallelism)
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    verbose: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let command = match args.command {
        Cmd::RpfCheck => Command::RpfCheck,
        Cmd::Moments => Command::Moments,
        Cmd::Rates => Command::Rates,
        Cmd::Edgeworth => Command::Edgeworth,
        Cmd::CltRate => Command::CltRate,
        Cmd::DecayCheck => Command::DecayCheck,
    };
    if let Some(k) = args.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let text = match &args.config {
        Some(p) => match std::fs::read_to_string(p) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: {}: {e}", p.display());
                return ExitCode::from(2);
            }
        },
        None => String::new(),
    };
    let mut cfg = match Config::parse(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(s) = args.seed {
        cfg.set("run", "seed", s.to_string()).expect("seed key exists");
    }
    match run(command, &cfg, &args.out, args.verbose) {
        Ok(outcome) => {
            for c in &outcome.checks {
                eprintln!("{} {}: {}", c.status.tag(), c.name, c.detail);
            }
            if outcome.ok() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
