use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use linf_cli::{CliResult, RunConfig};

/// Peak-norm optimal saturating control: synthesis, simulation, comparison
/// and reachable-set probing for the single-area frequency model.
#[derive(Parser, Debug)]
#[command(name = "linfctl", version)]
struct Args {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output.directory`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Debug logging (otherwise `RUST_LOG` or warnings only).
    #[arg(long, global = true)]
    verbose: bool,
    /// Use this single disturbance seed (probe: first seed).
    #[arg(long, global = true)]
    seed_override: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Design the controller (and observer) and write design.json + report.txt.
    Synthesize,
    /// Simulate open loop, low gain and high gains from a design file.
    Simulate {
        #[arg(long)]
        design: PathBuf,
    },
    /// Tabulate the proposed controller against the configured baselines.
    Compare,
    /// Probe the certified ellipsoid with random disturbance profiles.
    Probe {
        #[arg(long)]
        design: PathBuf,
    },
}

fn run(args: &Args) -> CliResult<()> {
    let path = args
        .config
        .as_ref()
        .ok_or_else(|| linf_cli::CliError::Parse("--config <path> is required".into()))?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(dir) = &args.out {
        cfg.output.directory = dir.clone();
    }
    let base_seed = args.seed_override.unwrap_or(cfg.simulation.seeds[0]);
    if let Some(seed) = args.seed_override {
        cfg.override_seed(seed);
    }
    match &args.command {
        Command::Synthesize => linf_cli::synthesize(&cfg).map(|_| ()),
        Command::Simulate { design } => linf_cli::simulate(&cfg, design).map(|_| ()),
        Command::Compare => linf_cli::compare(&cfg).map(|_| ()),
        Command::Probe { design } => linf_cli::probe(&cfg, design, base_seed).map(|_| ()),
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let level = if args.verbose { "debug" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
