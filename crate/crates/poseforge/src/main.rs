//! Command-line entry point.
//!
//! Exit codes: 0 on success, 1 when a pipeline stage fails, 2 for
//! configuration mistakes (bad keys or values, missing input files).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use poseforge::commands::{self, CommandError};
use poseforge::config::PipelineConfig;
use poseforge::runner::{resolve_threads, ThreadRunner};

#[derive(Parser)]
#[command(name = "poseforge", version, about = "Self-supervised pose embeddings from unlabeled video")]
struct Cli {
    /// Config file of `key = value` lines; defaults apply when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Override one config key (repeatable), e.g. --set train.batch_size=16
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Worker threads; default is POSEFORGE_THREADS, then all cores.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic articulated-figure dataset with ground truth
    Synth,
    /// Score per-frame motion (foreground/background flow ratio)
    Flow,
    /// Order motion scores into a staged release schedule
    Curriculum,
    /// Draw temporal tuples and spatial crop pairs for training
    Sample,
    /// Train the embedding network over the schedule and tuples
    Train,
    /// Mine repeated posture groups with a trained model
    MineReps,
    /// Embed every frame of every clip with a trained model
    Embed,
    /// Posture-comparison AuC on the synthetic benchmark
    EvalPosture,
    /// Pose retrieval hit rates over neighbor counts
    EvalRetrieval,
    /// Pose estimation by nearest-neighbor transfer (PCP and PCKh)
    EvalPose,
    /// Run the pipeline once per variant and tabulate benchmark AuC
    Ablation {
        /// Variant spec `NAME` or `NAME:key=value,key=value` (repeatable)
        #[arg(long = "variant", value_name = "SPEC")]
        variants: Vec<String>,
    },
}

fn dispatch(cli: &Cli) -> Result<(), CommandError> {
    let mut config = PipelineConfig::default();
    if let Some(path) = &cli.config {
        config.apply_file(path)?;
    }
    config.apply_overrides(&cli.set)?;
    config.validate()?;
    let runner = ThreadRunner::new(resolve_threads(cli.threads));

    match &cli.command {
        Command::Synth => commands::synth::run(&config),
        Command::Flow => commands::flow::run(&config, &runner),
        Command::Curriculum => commands::curriculum::run(&config),
        Command::Sample => commands::sample::run(&config),
        Command::Train => commands::train::run(&config),
        Command::MineReps => commands::mine_reps::run(&config, &runner),
        Command::Embed => commands::embed::run(&config, &runner),
        Command::EvalPosture => commands::eval_posture::run(&config),
        Command::EvalRetrieval => commands::eval_retrieval::run(&config),
        Command::EvalPose => commands::eval_pose::run(&config),
        Command::Ablation { variants } => commands::ablation::run(&config, variants, &runner),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            // One line per failure; nested sources are already inlined by
            // the error messages themselves.
            eprintln!("poseforge: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
