use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use nematic_cli::{run, Invocation, Profile, Scenario, EXIT_CONFIG, EXIT_OK};

/// Run a simulation scenario and write its tables, summary and manifest.
#[derive(Debug, Parser)]
#[command(name = "simulate", version)]
struct Args {
    scenario: Scenario,

    /// JSON overlay on the profile defaults, or a manifest from an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,

    #[arg(long)]
    out: PathBuf,

    #[arg(long)]
    seed: Option<u64>,

    /// Thread count; falls back to NEMATIC_WORKERS, then to all cores.
    #[arg(long)]
    workers: Option<usize>,

    #[arg(long, value_enum)]
    profile: Option<Profile>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::from(EXIT_OK as u8),
                _ => ExitCode::from(EXIT_CONFIG as u8),
            };
        }
    };
    let inv = Invocation {
        scenario: args.scenario,
        config: args.config,
        out: args.out,
        seed: args.seed,
        workers: args.workers,
        profile: args.profile,
    };
    match run(&inv) {
        Ok(outcome) => {
            println!(
                "{}",
                outcome.out_dir.join(nematic_cli::MANIFEST_FILE).display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
