//! `embed`: run every frame through the trained model and store one
//! embedding matrix per clip under `embeddings/<video_id>.pemb`.

use poseforge_core::exec::{map_indexed, JobRunner};
use poseforge_core::repetition::{embed_clip, EmbeddingSequence, RepetitionError};

use crate::config::PipelineConfig;
use crate::formats::planes::save_embeddings;

use super::artifacts::RunManifest;
use super::{load_checkpoint_checked, load_dataset_checked, CommandError};

pub fn run(config: &PipelineConfig, runner: &dyn JobRunner) -> Result<(), CommandError> {
    let dataset = load_dataset_checked(config)?;
    let ckpt = load_checkpoint_checked(config)?;
    let hyper = config.train.hyper();

    let embedded: Vec<Result<EmbeddingSequence, RepetitionError>> =
        map_indexed(runner, dataset.clips().len(), |i| {
            embed_clip(&ckpt.params, &hyper, &dataset.clips()[i], config.train.batch_size)
        });

    let mut manifest = RunManifest::new("embed", &config.out_dir);
    let mut n = 0usize;
    for (clip, result) in dataset.clips().iter().zip(embedded) {
        let seq = result?;
        let path = config
            .out_dir
            .join(format!("embeddings/{}.pemb", clip.video_id()));
        save_embeddings(&path, &seq)?;
        manifest.record(&config.out_dir, &path)?;
        n += seq.len();
    }
    manifest.write(config)?;
    println!(
        "embed: {} frames across {} clips into {}",
        n,
        dataset.clips().len(),
        config.out_dir.join("embeddings").display()
    );
    Ok(())
}
