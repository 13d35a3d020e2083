//! `sample`: draw temporal tuples and spatial crop samples from the
//! dataset. Writes `tuples.tsv`. Sampling is deterministic per
//! (seed, video, anchor), so the output is independent of worker count
//! and identical across runs.

use poseforge_core::sampling::{sample_spatial_crops, sample_temporal_tuples};

use crate::config::PipelineConfig;
use crate::formats::tuples::save_tuples;

use super::artifacts::RunManifest;
use super::{load_dataset_checked, CommandError, TUPLES_NAME};

pub fn run(config: &PipelineConfig) -> Result<(), CommandError> {
    let dataset = load_dataset_checked(config)?;
    let mut temporal = Vec::new();
    let mut spatial = Vec::new();
    for clip in dataset.clips() {
        temporal.extend(sample_temporal_tuples(clip, &config.sampler, config.anchor_stride));
        for frame in clip.frames().iter().step_by(config.spatial_stride as usize) {
            spatial.extend(sample_spatial_crops(frame, &config.sampler));
        }
    }
    let tuples_path = config.out_dir.join(TUPLES_NAME);
    save_tuples(&tuples_path, &temporal, &spatial)?;

    let mut manifest = RunManifest::new("sample", &config.out_dir);
    manifest.record(&config.out_dir, &tuples_path)?;
    manifest.write(config)?;
    println!(
        "sample: {} temporal tuples, {} spatial samples into {}",
        temporal.len(),
        spatial.len(),
        tuples_path.display()
    );
    Ok(())
}
