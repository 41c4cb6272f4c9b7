use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fpplab::runner::{self, RunOptions};

#[derive(Parser)]
#[command(name = "fpplab", version, about = "Run first passage percolation and random conductance experiments from JSON configs")]
struct Cli {
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, env = runner::WORKERS_ENV, default_value_t = 0)]
    workers: usize,
    /// Override the seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate and run an experiment.
    Run { config: PathBuf },
    /// List violated preconditions without running anything.
    Validate { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Validate { config } => runner::validate_file(config).map(|issues| {
            println!("{}", serde_json::json!({ "valid": issues.is_empty(), "issues": issues }));
            issues.is_empty()
        }),
        Command::Run { config } => runner::load_config(config).and_then(|cfg| {
            let options = RunOptions { seed: cli.seed, out: cli.out.clone(), workers: cli.workers };
            let manifest = runner::run(cfg, &options)?;
            println!("{}", serde_json::to_string(&manifest).expect("manifest serializes"));
            Ok(true)
        }),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("{}", e.report());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
