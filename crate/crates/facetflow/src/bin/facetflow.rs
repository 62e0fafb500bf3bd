use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use facetflow::config::Mode;
use facetflow::run::run_cli;

/// Regularized crystal-surface relaxation runs.
#[derive(Parser)]
#[command(version)]
struct Cli {
    /// stationary, continuation, evolve or verify
    mode: Mode,
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `[run] out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `[run] seed` and `[verify] seed`.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let summary = run_cli(cli.mode, &cli.config, cli.out, cli.seed);
    for e in &summary.errors {
        eprintln!("error: {e}");
    }
    eprintln!(
        "{}: {}{}",
        cli.mode,
        summary.status,
        summary
            .failure_stage
            .as_ref()
            .map(|s| format!(" (stage {s})"))
            .unwrap_or_default()
    );
    ExitCode::from(summary.exit_code as u8)
}
