use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cvqpon_cli::{run, Command};

/// Key rates of continuous-variable QKD over passive optical networks.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Per-user keys without and with trust, plus network totals.
    Keyrate(Common),
    /// Protocol totals along the scenario's sweep axis.
    Sweep(Common),
    /// Simulated parameter estimation with confidence intervals.
    Montecarlo(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario TOML file, or the name of a bundled scenario.
    file: PathBuf,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Overrides the scenario's Monte Carlo seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Cmd::Keyrate(a) => (Command::KeyRate, a),
        Cmd::Sweep(a) => (Command::Sweep, a),
        Cmd::Montecarlo(a) => (Command::MonteCarlo, a),
    };
    if let Some(k) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    match run(command, &args.file, &args.out, args.seed) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
