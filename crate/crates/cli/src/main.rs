use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use pauli_learn::harness::{describe, ExperimentConfig, HarnessError, Run, Stage};

#[derive(Parser)]
#[command(name = "pauli-learn", version, about = "Learn local Pauli noise from simulated experiments")]
struct Cli {
    /// Print the annotated config format and exit.
    #[arg(long)]
    describe: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate (or load) the ground-truth model.
    GenModel(Args),
    /// Simulate the shot bank.
    Simulate(Args),
    /// Estimate every eigenvalue up to the weight cap.
    Estimate(Args),
    /// Learn the interaction graph.
    LearnStructure(Args),
    /// Learn the coefficients on the learned structure.
    LearnCoeffs(Args),
    /// Compare the learned channel with the truth.
    Evaluate(Args),
    /// Run every stage.
    Pipeline(Args),
}

#[derive(clap::Args)]
struct Args {
    /// Experiment config file (JSON).
    #[arg(long)]
    config: PathBuf,
}

impl Command {
    fn split(&self) -> (Stage, &Args) {
        match self {
            Command::GenModel(a) => (Stage::Model, a),
            Command::Simulate(a) => (Stage::Simulate, a),
            Command::Estimate(a) => (Stage::Estimate, a),
            Command::LearnStructure(a) => (Stage::Structure, a),
            Command::LearnCoeffs(a) => (Stage::Coefficients, a),
            Command::Evaluate(a) | Command::Pipeline(a) => (Stage::Evaluate, a),
        }
    }
}

fn run(stage: Stage, args: &Args) -> anyhow::Result<Run> {
    let config = ExperimentConfig::load(&args.config)
        .with_context(|| format!("loading {}", args.config.display()))?;
    let mut run = Run::new(config)?;
    run.run_until(stage)?;
    Ok(run)
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<HarnessError>() {
        Some(HarnessError::Stage { .. }) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.describe {
        print!("{}", describe());
        return ExitCode::SUCCESS;
    }
    let Some(command) = cli.command else {
        eprintln!("no subcommand given; see --help");
        return ExitCode::from(1);
    };
    let (stage, args) = command.split();
    match run(stage, args) {
        Ok(run) => {
            print!("{}", run.report.to_text());
            println!("artifacts in {}", run.artifacts.dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
