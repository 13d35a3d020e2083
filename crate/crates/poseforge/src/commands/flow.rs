//! `flow`: score every (frame, successor) pair's fg/bg motion ratio.
//!
//! Writes `scores.tsv` in dataset order. With `flow.cache = true` it also
//! dumps each pair's flow field as a binary cache file. Pairs fan out
//! across the worker pool; results are collected by index, so the output
//! is identical for any thread count.

use poseforge_core::exec::{map_indexed, JobRunner};
use poseforge_core::flow::{estimate_flow, fg_bg_ratio, score_pair, FlowField, MotionScore};

use crate::config::PipelineConfig;
use crate::formats::planes::save_flow;
use crate::formats::scores::save_scores;

use super::artifacts::RunManifest;
use super::{load_dataset_checked, CommandError, SCORES_NAME};

pub fn run(config: &PipelineConfig, runner: &dyn JobRunner) -> Result<(), CommandError> {
    let dataset = load_dataset_checked(config)?;
    // Flatten (clip, t) pairs so the runner sees one job per flow problem.
    let mut pairs = Vec::new();
    for (c, clip) in dataset.clips().iter().enumerate() {
        for t in 0..clip.frames().len().saturating_sub(1) {
            pairs.push((c, t));
        }
    }

    type PairResult = Result<(MotionScore, Option<FlowField>), poseforge_core::flow::FlowError>;
    let results: Vec<PairResult> = map_indexed(runner, pairs.len(), |i| {
        let (c, t) = pairs[i];
        let frames = dataset.clips()[c].frames();
        let score = score_pair(&frames[t], &frames[t + 1], &config.flow)?;
        let field = if config.flow_cache {
            Some(estimate_flow(&frames[t].image, &frames[t + 1].image, &config.flow)?)
        } else {
            None
        };
        // The ratio is recomputed cheaply when caching; assert the cached
        // field agrees with the score we keep.
        if let Some(f) = &field {
            debug_assert_eq!(fg_bg_ratio(f, &frames[t].person_box)?, score.fg_bg_ratio);
        }
        Ok((score, field))
    });

    let mut scores = Vec::with_capacity(results.len());
    let mut manifest = RunManifest::new("flow", &config.out_dir);
    for (i, result) in results.into_iter().enumerate() {
        let (score, field) = result?;
        if let Some(field) = field {
            let (c, t) = pairs[i];
            let video_id = dataset.clips()[c].video_id();
            let path = config.out_dir.join(format!("flow/{video_id}_{t:05}.pflw"));
            save_flow(&path, &field)?;
            manifest.record(&config.out_dir, &path)?;
        }
        scores.push(score);
    }

    let scores_path = config.out_dir.join(SCORES_NAME);
    save_scores(&scores_path, &scores)?;
    manifest.record(&config.out_dir, &scores_path)?;
    manifest.write(config)?;
    println!("flow: scored {} frame pairs into {}", scores.len(), scores_path.display());
    Ok(())
}
