use clap::{Args, Parser, Subcommand};
use rhlab::assembly::config::RunOptions;
use rhlab::assembly::{run_experiment, ExperimentKind};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "rhlab", version, about = "Random real algebraic geometry experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Real root counts of random binary forms.
    Roots1d(Common),
    /// Signature-resolved determinant statistics of Gaussian symmetric matrices.
    Matrixstats(Common),
    /// Norms and mass concentration of peak sections.
    Fubini(Common),
    /// Barrier certificates for a model hypersurface.
    Barrier(Common),
    /// Topology of random plane curves.
    Curves2d(Common),
    /// Maximal separated sets on spheres and projective spaces.
    Packing(Common),
    /// End-to-end lower-bound report.
    Report(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, c) = match cli.command {
        Command::Roots1d(c) => (ExperimentKind::Roots1d, c),
        Command::Matrixstats(c) => (ExperimentKind::Matrixstats, c),
        Command::Fubini(c) => (ExperimentKind::Fubini, c),
        Command::Barrier(c) => (ExperimentKind::Barrier, c),
        Command::Curves2d(c) => (ExperimentKind::Curves2d, c),
        Command::Packing(c) => (ExperimentKind::Packing, c),
        Command::Report(c) => (ExperimentKind::Report, c),
    };
    let opts = RunOptions { experiment: Some(kind), seed: c.seed, out_dir: c.out };
    match run_experiment(&c.config, &opts) {
        Ok(r) => {
            for a in &r.artifacts {
                println!("{}", a.display());
            }
            println!("{}", r.manifest.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("rhlab {kind}: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
