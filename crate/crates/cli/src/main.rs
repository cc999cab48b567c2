use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use fairmed_cli::{run, RunConfig};

/// Fair-representation k-median clustering with no fairness violation.
#[derive(Parser, Debug)]
#[command(name = "fairmed", version, about)]
struct Cli {
    #[command(flatten)]
    run: RunConfig,
    /// Result file (stdout if absent)
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FAIRMED_LOG", "warn")).init();
    let cli = Cli::parse();
    let report = match run(&cli.run) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("fairmed: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let json = report.to_json();
    let written = match &cli.out {
        Some(path) => std::fs::write(path, json).map_err(|e| format!("{}: {e}", path.display())),
        None => {
            print!("{json}");
            Ok(())
        }
    };
    if let Err(e) = written {
        eprintln!("fairmed: {e}");
        return ExitCode::from(1);
    }
    ExitCode::SUCCESS
}
