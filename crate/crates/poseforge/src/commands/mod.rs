//! One module per CLI subcommand, plus shared artifact bookkeeping.
//!
//! Every command reads what it needs from a [`PipelineConfig`], writes its
//! artifacts under the output directory, and finishes by writing a run
//! manifest naming each artifact with its content hash. Missing inputs
//! are configuration-level mistakes (exit 2); failures inside the modules
//! rank as runtime errors (exit 1).

pub mod ablation;
pub mod artifacts;
pub mod curriculum;
pub mod embed;
pub mod eval_pose;
pub mod eval_posture;
pub mod eval_retrieval;
pub mod flow;
pub mod mine_reps;
pub mod sample;
pub mod synth;
pub mod train;

use std::path::{Path, PathBuf};

use poseforge_core::curriculum::CurriculumError;
use poseforge_core::data::{DataError, Dataset};
use poseforge_core::eval::EvalError;
use poseforge_core::flow::FlowError;
use poseforge_core::net::{ModelCheckpoint, TrainError};
use poseforge_core::repetition::RepetitionError;
use poseforge_core::synth::SynthError;

use crate::config::{ConfigError, PipelineConfig};
use crate::formats::FormatError;

pub const SCORES_NAME: &str = "scores.tsv";
pub const SCHEDULE_NAME: &str = "schedule.tsv";
pub const TUPLES_NAME: &str = "tuples.tsv";
pub const CHECKPOINT_NAME: &str = "checkpoint.pfck";
pub const LOSS_LOG_NAME: &str = "loss_log.tsv";
pub const GROUPS_NAME: &str = "groups.tsv";
pub const MINED_TUPLES_NAME: &str = "mined_tuples.tsv";
pub const GT_NAME: &str = "gt.tsv";

#[derive(Debug, thiserror::Error)]
pub enum CommandError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("missing input {}: {hint}", path.display())]
    MissingInput { path: PathBuf, hint: String },
    #[error("{0}")]
    Format(#[from] FormatError),
    #[error("{0}")]
    Synth(#[from] SynthError),
    #[error("{0}")]
    Flow(#[from] FlowError),
    #[error("{0}")]
    Curriculum(#[from] CurriculumError),
    #[error("{0}")]
    Train(#[from] TrainError),
    #[error("{0}")]
    Repetition(#[from] RepetitionError),
    #[error("{0}")]
    Eval(#[from] EvalError),
    #[error("{0}")]
    Data(#[from] DataError),
}

impl CommandError {
    /// Config mistakes (bad keys, missing inputs) exit 2; everything that
    /// goes wrong while the pipeline runs exits 1.
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::Config(_) | CommandError::MissingInput { .. } => 2,
            _ => 1,
        }
    }
}

/// Checks an input file exists before a command starts work, so the
/// diagnostic names the path and which step produces it.
pub fn require_input(path: &Path, hint: &str) -> Result<(), CommandError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CommandError::MissingInput {
            path: path.to_path_buf(),
            hint: hint.to_string(),
        })
    }
}

pub fn load_dataset_checked(config: &PipelineConfig) -> Result<Dataset, CommandError> {
    let manifest = config.data_dir.join(crate::formats::dataset::MANIFEST_NAME);
    require_input(&manifest, "run the synth command (or point data.dir at a dataset) first")?;
    Ok(crate::formats::dataset::load_dataset(&config.data_dir)?)
}

/// The model file the mining, embedding, and eval commands read: the
/// explicit `checkpoint` key when set, else the train command's output.
pub fn checkpoint_path(config: &PipelineConfig) -> PathBuf {
    if config.checkpoint.as_os_str().is_empty() {
        config.out_dir.join(CHECKPOINT_NAME)
    } else {
        config.checkpoint.clone()
    }
}

pub fn load_checkpoint_checked(config: &PipelineConfig) -> Result<ModelCheckpoint, CommandError> {
    let path = checkpoint_path(config);
    require_input(&path, "run the train command (or set the checkpoint key) first")?;
    Ok(crate::formats::checkpoint::load_checkpoint(&path, config.train.clone())?)
}
