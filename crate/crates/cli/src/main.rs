use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use nonlocal_heat_cli::{run, Mode, Overrides, THREADS_ENV};

/// Solve, probe, refine or sweep the nonlocal heat problem described by a
/// JSON config.
#[derive(Debug, Parser)]
#[command(name = "nonlocal-heat", version)]
struct Args {
    /// Path to the JSON run config.
    config: PathBuf,
    /// Override the config's mode (solve, probe, convergence_study, sweep).
    #[arg(long)]
    mode: Option<Mode>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the seed used for random probe starts.
    #[arg(long)]
    seed: Option<u64>,
    /// Do not print the summary line.
    #[arg(long)]
    quiet: bool,
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| format!("{THREADS_ENV} must be a nonnegative integer, got `{raw}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n.max(1))
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 3 } else { 0 });
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(3);
    }
    let overrides = Overrides {
        mode: args.mode,
        out: args.out,
        seed: args.seed,
    };
    match run(&args.config, &overrides) {
        Ok(outcome) => {
            if !args.quiet {
                println!("{}", outcome.summary);
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
