//! `eval-pose`: pose estimation by nearest-neighbor transfer.
//!
//! Uses the same query/gallery split as `eval-retrieval`: each query's
//! pose is predicted as the pose of its embedding-nearest gallery item,
//! then scored against the query's own annotation with PCP (per part)
//! and PCKh (per joint). Writes `eval_pose.csv` with one row per part,
//! one per joint, and a summary row for each protocol.

use poseforge_core::data::Joint;
use poseforge_core::eval::{default_pcp_parts, nn_pose_transfer, pckh, pcp, EvalError, PartStatus};

use crate::config::PipelineConfig;
use crate::formats::csvout::write_csv;

use super::artifacts::RunManifest;
use super::eval_retrieval::{collect_items, split_queries};
use super::{load_checkpoint_checked, load_dataset_checked, require_input, CommandError, GT_NAME};

pub const CSV_NAME: &str = "eval_pose.csv";

pub fn run(config: &PipelineConfig) -> Result<(), CommandError> {
    let dataset = load_dataset_checked(config)?;
    let gt_path = config.data_dir.join(GT_NAME);
    require_input(&gt_path, "run the synth command first (no ground-truth sidecar)")?;
    let gts = crate::formats::sidecar::load_ground_truth(&gt_path, &dataset)?;
    let ckpt = load_checkpoint_checked(config)?;

    let items = collect_items(config, &dataset, &gts, &ckpt)?;
    let (queries, gallery) = split_queries(items, config.n_queries, config.seed);
    config.retrieval.validate()?;
    if queries.is_empty() {
        return Err(EvalError::NoQueries.into());
    }
    if gallery.is_empty() {
        return Err(EvalError::TestSetTooSmall { len: 0, cutoff: 0 }.into());
    }

    let parts = default_pcp_parts();
    let mut part_correct = [0usize; 11];
    let mut part_evaluated = [0usize; 11];
    let mut joint_correct = [0usize; 14];
    let mut pckh_queries = 0usize;
    let mut pcp_mean_sum = 0.0f64;
    let mut pcp_queries = 0usize;
    for q in &queries {
        let predicted = nn_pose_transfer(&q.embedding, &gallery);
        // Zero-length parts can make a whole query unevaluable; such
        // queries count toward neither protocol's denominators.
        if let Ok(res) = pcp(&predicted, &q.pose, &parts, config.retrieval.pcp_fraction) {
            pcp_mean_sum += res.mean;
            pcp_queries += 1;
            for (i, &(_, _, status)) in res.parts.iter().enumerate() {
                match status {
                    PartStatus::Correct => {
                        part_correct[i] += 1;
                        part_evaluated[i] += 1;
                    }
                    PartStatus::Incorrect => part_evaluated[i] += 1,
                    PartStatus::SkippedZeroLength => {}
                }
            }
        }
        if let Ok(res) = pckh(&predicted, &q.pose, config.retrieval.pckh_fraction) {
            pckh_queries += 1;
            for (j, &ok) in res.per_joint.iter().enumerate() {
                joint_correct[j] += ok as usize;
            }
        }
    }
    if pcp_queries == 0 || pckh_queries == 0 {
        return Err(EvalError::NoEvaluableParts.into());
    }

    let mut rows: Vec<Vec<String>> = Vec::new();
    for (i, (a, b)) in parts.iter().enumerate() {
        let frac = if part_evaluated[i] == 0 {
            f64::NAN
        } else {
            part_correct[i] as f64 / part_evaluated[i] as f64
        };
        rows.push(vec![
            "pcp".to_string(),
            format!("{}-{}", a.name(), b.name()),
            frac.to_string(),
        ]);
    }
    rows.push(vec![
        "pcp".to_string(),
        "mean".to_string(),
        (pcp_mean_sum / pcp_queries as f64).to_string(),
    ]);
    for (j, joint) in Joint::ALL.iter().enumerate() {
        rows.push(vec![
            "pckh".to_string(),
            joint.name().to_string(),
            (joint_correct[j] as f64 / pckh_queries as f64).to_string(),
        ]);
    }
    let pckh_total: usize = joint_correct.iter().sum();
    rows.push(vec![
        "pckh".to_string(),
        "total".to_string(),
        (pckh_total as f64 / (pckh_queries * 14) as f64).to_string(),
    ]);

    let csv_path = config.out_dir.join(CSV_NAME);
    write_csv(&csv_path, &["metric", "name", "value"], &rows)?;

    let mut manifest = RunManifest::new("eval-pose", &config.out_dir);
    manifest.record(&config.out_dir, &csv_path)?;
    manifest.write(config)?;
    println!(
        "eval-pose: {} queries transferred from {} gallery items into {}",
        queries.len(),
        gallery.len(),
        csv_path.display()
    );
    Ok(())
}
