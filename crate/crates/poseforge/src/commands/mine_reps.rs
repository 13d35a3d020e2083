//! `mine-reps`: embed every clip with the trained model, mine repeated
//! poses from the self-similarity structure, and write the groups plus
//! ready-to-train tuples.
//!
//! Outputs `groups.tsv` (anchors with their repeats, in real frame
//! indices) and `mined_tuples.tsv` (temporal records the train command
//! joins into the earliest block). With `miner.dump_ssm = true` each
//! clip's filtered self-similarity matrix lands next to them. Clips fan
//! out across the worker pool; results are index-ordered.

use poseforge_core::exec::{map_indexed, JobRunner};
use poseforge_core::repetition::{
    filter_diagonal, mine_repetitions, positions_to_frame_ids, sample_repetition_tuples,
    self_similarity, embed_clip, RepetitionError, RepetitionGroup, SelfSimilarityMatrix,
};
use poseforge_core::sampling::TemporalTuple;

use crate::config::PipelineConfig;
use crate::formats::planes::save_ssm;
use crate::formats::tuples::save_tuples;

use super::artifacts::RunManifest;
use super::{
    load_checkpoint_checked, load_dataset_checked, CommandError, GROUPS_NAME, MINED_TUPLES_NAME,
};

pub fn run(config: &PipelineConfig, runner: &dyn JobRunner) -> Result<(), CommandError> {
    let dataset = load_dataset_checked(config)?;
    let ckpt = load_checkpoint_checked(config)?;
    let hyper = config.train.hyper();

    type ClipResult =
        Result<(Vec<RepetitionGroup>, Vec<TemporalTuple>, SelfSimilarityMatrix), RepetitionError>;
    let per_clip: Vec<ClipResult> = map_indexed(runner, dataset.clips().len(), |i| {
        let clip = &dataset.clips()[i];
        let emb = embed_clip(&ckpt.params, &hyper, clip, config.train.batch_size)?;
        let ssm = self_similarity(&emb)?;
        let filtered = filter_diagonal(&ssm, &config.miner)?;
        let groups = mine_repetitions(&filtered, &config.miner)?;
        let mut tuples = sample_repetition_tuples(&groups, &config.miner, &config.sampler);
        positions_to_frame_ids(clip, &mut tuples);
        Ok((groups, tuples, filtered))
    });

    let mut manifest = RunManifest::new("mine-reps", &config.out_dir);
    let mut all_groups = Vec::new();
    let mut all_tuples = Vec::new();
    for (i, result) in per_clip.into_iter().enumerate() {
        let (mut groups, tuples, filtered) = result?;
        // Groups are reported in real frame indices, consistent with the
        // tuples (mining works in clip positions).
        let clip = &dataset.clips()[i];
        for g in &mut groups {
            g.anchor_index = clip.frames()[g.anchor_index].frame_index as usize;
            for r in &mut g.repeat_indices {
                *r = clip.frames()[*r].frame_index as usize;
            }
        }
        if config.dump_ssm {
            let path = config.out_dir.join(format!("ssm/{}.pssm", clip.video_id()));
            save_ssm(&path, &filtered)?;
            manifest.record(&config.out_dir, &path)?;
        }
        all_groups.extend(groups);
        all_tuples.extend(tuples);
    }

    let groups_path = config.out_dir.join(GROUPS_NAME);
    crate::formats::groups::save_groups(&groups_path, &all_groups)?;
    let tuples_path = config.out_dir.join(MINED_TUPLES_NAME);
    save_tuples(&tuples_path, &all_tuples, &[])?;

    manifest.record(&config.out_dir, &groups_path)?;
    manifest.record(&config.out_dir, &tuples_path)?;
    manifest.write(config)?;
    println!(
        "mine-reps: {} groups, {} tuples into {}",
        all_groups.len(),
        all_tuples.len(),
        groups_path.display()
    );
    Ok(())
}
