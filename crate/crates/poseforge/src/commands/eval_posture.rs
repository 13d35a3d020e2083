//! `eval-posture`: posture-analysis AuC on the synthetic benchmark.
//!
//! Builds same-phase/anti-phase exemplars from the ground-truth sidecar,
//! embeds every referenced frame once, and scores how well embedding
//! similarity ranks same-pose frames above opposite-pose frames. Writes
//! `eval_posture.csv`: one row per clip plus a summary row with the
//! average over all exemplars.

use std::collections::BTreeSet;

use poseforge_core::eval::{embed_frames, posture_auc_from_embeddings};
use poseforge_core::seed::derive_seed;
use poseforge_core::synth::generate_benchmark;

use crate::config::PipelineConfig;
use crate::formats::csvout::write_csv;

use super::artifacts::RunManifest;
use super::{load_checkpoint_checked, load_dataset_checked, require_input, CommandError, GT_NAME};

pub const CSV_NAME: &str = "eval_posture.csv";

pub fn run(config: &PipelineConfig) -> Result<(), CommandError> {
    let (overall, n_exemplars) = evaluate(config)?;
    println!("eval-posture: average AuC {overall:.4} over {n_exemplars} exemplars");
    Ok(())
}

/// Full evaluation pass; returns the overall AuC and exemplar count so
/// the ablation driver can reuse it per variant.
pub(crate) fn evaluate(config: &PipelineConfig) -> Result<(f64, usize), CommandError> {
    let dataset = load_dataset_checked(config)?;
    let gt_path = config.data_dir.join(GT_NAME);
    require_input(&gt_path, "run the synth command first (no ground-truth sidecar)")?;
    let gts = crate::formats::sidecar::load_ground_truth(&gt_path, &dataset)?;
    let ckpt = load_checkpoint_checked(config)?;
    let hyper = config.train.hyper();

    // One benchmark per clip, then one embedding pass over the union of
    // every referenced frame.
    let mut per_clip = Vec::new();
    let mut ids = BTreeSet::new();
    for gt in &gts {
        let seed = derive_seed(config.seed, &format!("eval.queries.{}", gt.video_id));
        let exemplars = generate_benchmark(gt, config.exemplars_per_clip, seed)?;
        for ex in &exemplars {
            ids.insert(ex.query.clone());
            ids.extend(ex.positives.iter().cloned());
            ids.extend(ex.negatives.iter().cloned());
        }
        per_clip.push((gt.video_id.clone(), exemplars));
    }
    let embeddings = embed_frames(&ckpt.params, &hyper, &dataset, &ids, config.train.batch_size)?;

    let mut rows = Vec::new();
    let mut all = Vec::new();
    for (video_id, exemplars) in &per_clip {
        let auc = posture_auc_from_embeddings(exemplars, &embeddings)?;
        rows.push(vec![video_id.clone(), exemplars.len().to_string(), auc.to_string()]);
        all.extend(exemplars.iter().cloned());
    }
    let overall = posture_auc_from_embeddings(&all, &embeddings)?;
    rows.push(vec!["mean".to_string(), all.len().to_string(), overall.to_string()]);

    let csv_path = config.out_dir.join(CSV_NAME);
    write_csv(&csv_path, &["clip", "exemplars", "average_auc"], &rows)?;

    let mut manifest = RunManifest::new("eval-posture", &config.out_dir);
    manifest.record(&config.out_dir, &csv_path)?;
    manifest.write(config)?;
    Ok((overall, all.len()))
}
