//! `curriculum`: order scored samples by difficulty and split them into
//! release blocks. Reads `scores.tsv`, writes `schedule.tsv`.

use poseforge_core::curriculum::build_curriculum;

use crate::config::PipelineConfig;
use crate::formats::schedule::save_schedule;
use crate::formats::scores::load_scores;

use super::artifacts::RunManifest;
use super::{require_input, CommandError, SCHEDULE_NAME, SCORES_NAME};

pub fn run(config: &PipelineConfig) -> Result<(), CommandError> {
    let scores_path = config.out_dir.join(SCORES_NAME);
    require_input(&scores_path, "run the flow command first")?;
    let scores = load_scores(&scores_path)?;
    let schedule = build_curriculum(&scores, &config.fractions, config.update_interval)?;
    let schedule_path = config.out_dir.join(SCHEDULE_NAME);
    save_schedule(&schedule_path, &schedule)?;

    let mut manifest = RunManifest::new("curriculum", &config.out_dir);
    manifest.record(&config.out_dir, &schedule_path)?;
    manifest.write(config)?;
    println!(
        "curriculum: {} samples in {} blocks into {}",
        schedule.len(),
        schedule.n_blocks(),
        schedule_path.display()
    );
    Ok(())
}
