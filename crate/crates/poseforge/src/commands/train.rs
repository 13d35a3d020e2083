//! `train`: run the training loop over the sampled tuples under the
//! curriculum schedule. Writes `checkpoint.pfck` and `loss_log.tsv`.
//!
//! With `train.resume` set, training continues from the named checkpoint
//! (parameters and optimizer state carry over; the iteration counter and
//! curriculum release restart, which is exactly the bootstrap retraining
//! contract). With `train.mined_tuples` set, those tuples join the
//! earliest curriculum block so they train from the first iteration.

use poseforge_core::net::{train, train_from, TrainingPool};

use crate::config::PipelineConfig;
use crate::formats::checkpoint::{load_checkpoint, save_checkpoint};
use crate::formats::losslog::save_loss_log;
use crate::formats::schedule::load_schedule;
use crate::formats::tuples::load_tuples;

use super::artifacts::RunManifest;
use super::{
    load_dataset_checked, require_input, CommandError, CHECKPOINT_NAME, LOSS_LOG_NAME,
    SCHEDULE_NAME, TUPLES_NAME,
};

pub fn run(config: &PipelineConfig) -> Result<(), CommandError> {
    let dataset = load_dataset_checked(config)?;
    let schedule_path = config.out_dir.join(SCHEDULE_NAME);
    require_input(&schedule_path, "run the curriculum command first")?;
    let schedule = load_schedule(&schedule_path, config.update_interval)?;
    let tuples_path = config.out_dir.join(TUPLES_NAME);
    require_input(&tuples_path, "run the sample command first")?;
    let (temporal, spatial) = load_tuples(&tuples_path)?;

    let (mut pool, skipped) = TrainingPool::from_samples(&temporal, &spatial, &schedule);
    if skipped > 0 {
        eprintln!("train: {skipped} tuples reference unscheduled frames and were dropped");
    }
    if !config.mined_tuples.as_os_str().is_empty() {
        require_input(&config.mined_tuples, "run the mine-reps command first")?;
        let (mined, _) = load_tuples(&config.mined_tuples)?;
        pool = pool.with_mined(&mined, 0);
    }

    let (ckpt, log) = if config.resume.as_os_str().is_empty() {
        train(&dataset, &schedule, &pool, &config.train)?
    } else {
        require_input(&config.resume, "no checkpoint to resume from")?;
        let prev = load_checkpoint(&config.resume, config.train.clone())?;
        train_from(prev.params, prev.adam, &dataset, &schedule, &pool, &config.train)?
    };

    let ckpt_path = config.out_dir.join(CHECKPOINT_NAME);
    save_checkpoint(&ckpt_path, &ckpt)?;
    let log_path = config.out_dir.join(LOSS_LOG_NAME);
    save_loss_log(&log_path, &log)?;

    let mut manifest = RunManifest::new("train", &config.out_dir);
    manifest.record(&config.out_dir, &ckpt_path)?;
    manifest.record(&config.out_dir, &log_path)?;
    manifest.write(config)?;
    let last = log.last().map(|r| r.total).unwrap_or(f64::NAN);
    println!(
        "train: {} iterations, final loss {last:.6}, checkpoint {}",
        config.train.total_iterations,
        ckpt_path.display()
    );
    Ok(())
}
