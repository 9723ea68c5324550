use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mft::cli::{run_experiment, summary};
use mft::config::{ExperimentKind, Overrides};

#[derive(Parser)]
#[command(name = "mftsim", version, about = "Mutual-fund projection experiments on random-coefficient markets")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Number of Monte Carlo paths, overriding the config.
    #[arg(long, global = true)]
    paths: Option<usize>,

    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads. Results do not depend on this.
    #[arg(long, global = true, env = "MFTSIM_THREADS")]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Simulate each strategy and tabulate terminal wealth and utilities.
    Simulate,
    /// Project each strategy onto the fund direction and emit certificates.
    Project,
    /// Paired comparison of each strategy against its projection.
    Compare,
    /// Expected utility over a grid of fund weights.
    Sweep,
    /// Lag-averaging convergence ladder.
    Converge,
    /// Admissibility diagnostics for the configured utilities.
    CheckUtility,
    /// Run the experiment kind named in the config.
    Run,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Some(config) = cli.config else {
        eprintln!("error: --config <file> is required");
        return ExitCode::from(2);
    };
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be >= 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let kind = match cli.command {
        Command::Simulate => Some(ExperimentKind::Simulate),
        Command::Project => Some(ExperimentKind::Project),
        Command::Compare => Some(ExperimentKind::Compare),
        Command::Sweep => Some(ExperimentKind::Sweep),
        Command::Converge => Some(ExperimentKind::Converge),
        Command::CheckUtility => Some(ExperimentKind::CheckUtility),
        Command::Run => None,
    };
    let overrides = Overrides {
        kind,
        seed: cli.seed,
        paths: cli.paths,
    };
    match run_experiment(&config, &overrides, cli.out.as_deref()) {
        Ok(files) => {
            print!("{}", summary(&files));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
