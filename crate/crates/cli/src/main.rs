use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use nsmooth_cli::{run, Command};

/// Generalized gradients, smoothing and fibrations on model manifolds.
#[derive(Parser)]
#[command(name = "nsmooth", version)]
struct Cli {
    command: Command,
    /// JSON run configuration; optional for `selftest`.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for report.json and grid.csv.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Overrides the seed of the configuration.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command, cli.config.as_deref(), &cli.out, cli.seed) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("nsmooth {}: check failed, see {}", cli.command.name(), cli.out.join("report.json").display());
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
