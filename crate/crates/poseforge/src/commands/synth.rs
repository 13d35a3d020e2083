//! `synth`: generate the synthetic dataset and its ground-truth sidecar.
//!
//! Writes `manifest.tsv`, the frame images, and `gt.tsv` under the data
//! directory. Clip seeds derive from the global seed and the clip index;
//! per-clip motion amplitude sweeps linearly from `amplitude_min` to
//! `amplitude_max` so the dataset spans easy through hard motion.

use poseforge_core::data::Dataset;
use poseforge_core::seed::derive_seed;
use poseforge_core::synth::{generate_clip, SynthParams};

use crate::config::PipelineConfig;
use crate::formats::dataset::{save_dataset, MANIFEST_NAME};
use crate::formats::sidecar::save_ground_truth;

use super::artifacts::RunManifest;
use super::{CommandError, GT_NAME};

pub fn clip_params(config: &PipelineConfig, index: u32) -> SynthParams {
    let span = config.synth.clips.saturating_sub(1).max(1) as f32;
    let t = index as f32 / span;
    SynthParams {
        n_frames: config.synth.n_frames,
        image_size: config.synth.image_size,
        period: config.synth.period,
        amplitude: config.synth.amplitude_min
            + t * (config.synth.amplitude_max - config.synth.amplitude_min),
        background_motion: config.synth.background_motion,
        noise_sigma: config.synth.noise_sigma,
        seed: derive_seed(config.seed, &format!("synth.clip.{index}")),
    }
}

pub fn run(config: &PipelineConfig) -> Result<(), CommandError> {
    let mut clips = Vec::with_capacity(config.synth.clips as usize);
    let mut gts = Vec::with_capacity(config.synth.clips as usize);
    for i in 0..config.synth.clips {
        let params = clip_params(config, i);
        let (clip, gt) = generate_clip(&params, &format!("clip{i:03}"))?;
        clips.push(clip);
        gts.push(gt);
    }
    let dataset = Dataset::new(clips)?;
    save_dataset(&config.data_dir, &dataset)?;
    let gt_path = config.data_dir.join(GT_NAME);
    save_ground_truth(&gt_path, &gts)?;

    let mut manifest = RunManifest::new("synth", &config.out_dir);
    manifest.record(&config.data_dir, &config.data_dir.join(MANIFEST_NAME))?;
    manifest.record(&config.data_dir, &gt_path)?;
    for clip in dataset.clips() {
        for frame in clip.frames() {
            let rel = format!("frames/{}/{:05}.pgm", frame.video_id, frame.frame_index);
            manifest.record(&config.data_dir, &config.data_dir.join(rel))?;
        }
    }
    manifest.write(config)?;
    println!(
        "synth: wrote {} clips x {} frames under {}",
        config.synth.clips,
        config.synth.n_frames,
        config.data_dir.display()
    );
    Ok(())
}
