use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use lgsim_cli::config::{OutputFormat, ScenarioConfig};
use lgsim_cli::runner::{self, RunError};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "lgsim",
    about = "Temporal-correlation protocol scans and Leggett-Garg inequality reports"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario config and write CSV/JSON reports.
    Run {
        /// Path to the JSON scenario config.
        config: PathBuf,
        /// Output directory (overrides the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Monte Carlo master seed (overrides the config).
        #[arg(long)]
        seed: Option<u64>,
        /// Output format (overrides the config).
        #[arg(long, value_enum)]
        format: Option<OutputFormat>,
        /// Worker threads for grid dispatch and Monte Carlo batches.
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };

    let Command::Run {
        config,
        out,
        seed,
        format,
        threads,
    } = cli.command;

    if let Some(n) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: could not configure thread pool: {e}");
            return ExitCode::from(2);
        }
    }

    let text = match std::fs::read_to_string(&config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("config error: cannot read {}: {e}", config.display());
            return ExitCode::from(1);
        }
    };
    let mut scenario = match ScenarioConfig::from_json(&text) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(1);
        }
    };
    if let Some(dir) = out {
        scenario.output.path = dir;
    }
    if let Some(s) = seed {
        scenario.seed = s;
    }
    if let Some(f) = format {
        scenario.output.format = f;
    }

    match runner::run(&scenario) {
        Ok(outcome) => {
            if let Some(path) = &outcome.csv_path {
                println!("wrote {}", path.display());
            }
            if let Some(path) = &outcome.json_path {
                println!("wrote {}", path.display());
            }
            println!(
                "rows: {}; max violation {:.6}{}",
                outcome.summary.rows,
                outcome.summary.max_violation,
                match outcome.summary.argmax_tau {
                    Some(tau) => format!(" at tau = {tau:.6}"),
                    None => String::new(),
                }
            );
            ExitCode::SUCCESS
        }
        Err(RunError::Config(e)) => {
            eprintln!("config error: {e}");
            ExitCode::from(1)
        }
        Err(RunError::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
