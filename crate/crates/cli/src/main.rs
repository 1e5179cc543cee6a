use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use netdelay_cli::{run, Command, Flags};

/// Controllability analysis for neutral delay transport networks.
///
/// Exit status: 0 success, 1 error, 2 defective (controllability only).
#[derive(Parser)]
#[command(name = "netdelay", version)]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true, default_value = "netdelay.json")]
    config: PathBuf,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Gauss nodes per edge (overrides the config).
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Random seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; all cores when absent.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check the config and print a model summary.
    Validate,
    /// Locate characteristic roots in the search box.
    Spectrum,
    /// Compare the resolvent with the reference integrator and sweep resolvent norms.
    ResolventCheck,
    /// Rank the reachability columns and report the defect.
    Controllability,
    /// Run the time-domain simulator.
    Simulate,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: --threads: {e}");
            return ExitCode::from(1);
        }
    }
    let cmd = match cli.command {
        Cmd::Validate => Command::Validate,
        Cmd::Spectrum => Command::Spectrum,
        Cmd::ResolventCheck => Command::ResolventCheck,
        Cmd::Controllability => Command::Controllability,
        Cmd::Simulate => Command::Simulate,
    };
    let flags = Flags { config: cli.config, out: cli.out, grid: cli.grid, seed: cli.seed };
    match run(cmd, &flags) {
        Ok(outcome) => ExitCode::from(outcome.code() as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
