use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pdepet_cli::{run_pipeline, Command, RunConfig};

#[derive(Parser)]
#[command(name = "pdepet", version, about = "Tracer transport simulation and direct parameter reconstruction from dynamic PET data")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write the ground-truth parameter fields and defect mask.
    Phantom(Args),
    /// Run the forward model on the ground truth.
    Simulate(Args),
    /// Simulate on a refined grid and sample sinogram counts.
    Synth(Args),
    /// Reconstruct the parameters from the counts written by `synth`.
    Reconstruct(Args),
    /// Compare the adjoint gradient with finite differences.
    Gradcheck(Args),
}

#[derive(clap::Args)]
struct Args {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the phantom preset (constant, edge_defect, inner_defect).
    #[arg(long)]
    preset: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, args) = match cli.command {
        Cmd::Phantom(a) => (Command::Phantom, a),
        Cmd::Simulate(a) => (Command::Simulate, a),
        Cmd::Synth(a) => (Command::Synth, a),
        Cmd::Reconstruct(a) => (Command::Reconstruct, a),
        Cmd::Gradcheck(a) => (Command::Gradcheck, a),
    };
    let run = || -> anyhow::Result<String> {
        let mut cfg = RunConfig::load(&args.config)?;
        if let Some(s) = args.seed {
            cfg.seed = s;
        }
        if let Some(p) = &args.preset {
            cfg.phantom.preset = p.clone();
        }
        run_pipeline(&cfg, cmd, &args.out)
    };
    match run() {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
