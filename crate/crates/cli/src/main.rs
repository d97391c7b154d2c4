use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use photocount_cli::{load_scenario, run, RunOptions};

/// Photocount statistics of chaotic radiation: runs one JSON scenario and
/// writes its CSV table and `summary.json`.
///
/// Exit codes: 0 success, 1 i/o failure, 2 invalid scenario, 3 regime
/// warnings under --strict.
#[derive(Parser, Debug)]
#[command(name = "photocount", version)]
struct Args {
    /// Scenario file (JSON).
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Treat regime warnings as errors.
    #[arg(long)]
    strict: bool,
    /// Validate the scenario and exit without computing.
    #[arg(long)]
    validate_only: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    let opts = RunOptions {
        out: args.out,
        seed: args.seed,
        strict: args.strict,
        validate_only: args.validate_only,
    };
    let result = load_scenario(&args.scenario).and_then(|s| run(&s, &opts));
    match result {
        Ok(report) => {
            for f in &report.files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
