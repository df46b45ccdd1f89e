use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use eas_cli::{execute, parse_config, CliError, Reporter};

/// Simulations and audits for compressible Euler-alignment flow with fractional alignment.
#[derive(Debug, Parser)]
#[command(name = "eas", version)]
struct Args {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Scenario seed; overrides `scenario.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Suppress progress messages.
    #[arg(long)]
    quiet: bool,
}

fn main_inner(args: &Args) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", args.config.display())))?;
    let mut cfg = parse_config(&text)?;
    if let Some(seed) = args.seed {
        cfg.scenario.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.output.dir = out.clone();
    }
    let out = cfg.output.dir.clone();
    execute(&cfg, &out, Reporter { quiet: args.quiet })
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match main_inner(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("eas: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
