use std::path::PathBuf;
use std::process::ExitCode;

use bdirs_core::Variant;
use bdirs_sim::{execute, parse_seed_range, Experiment, ExperimentConfig, SimError};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "bdirs",
    version,
    about = "Seeded experiments for the BD-IRS assisted 1-bit THz link"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Outer-iteration SE traces at a single power.
    Converge(RunArgs),
    /// Final SE over the (N, P) grid.
    Sweep(RunArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantChoice {
    Bd,
    Diag,
    Both,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; falls back to `output.dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replace the configured seeds with `a..b` or `a..=b`.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long, value_enum)]
    variant: Option<VariantChoice>,
    #[arg(long)]
    l_bits: Option<u32>,
}

fn run(experiment: Experiment, args: RunArgs) -> Result<Vec<PathBuf>, SimError> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(range) = &args.seeds {
        cfg.seeds = parse_seed_range(range)?;
    }
    if let Some(choice) = args.variant {
        cfg.variants = match choice {
            VariantChoice::Bd => vec![Variant::Bd],
            VariantChoice::Diag => vec![Variant::Diag],
            VariantChoice::Both => Variant::ALL.to_vec(),
        };
    }
    if let Some(l) = args.l_bits {
        cfg.l_bits = l;
    }
    let out = args
        .out
        .or_else(|| cfg.output.dir.clone())
        .ok_or_else(|| SimError::Config("no output directory: pass --out or set output.dir".into()))?;
    execute(experiment, &cfg, &out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Converge(a) => run(Experiment::Converge, a),
        Command::Sweep(a) => run(Experiment::Sweep, a),
    };
    match result {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
