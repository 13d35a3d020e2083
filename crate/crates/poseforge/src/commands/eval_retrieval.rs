//! `eval-retrieval`: pose retrieval quality over neighbor counts K.
//!
//! Every annotated frame becomes an item (embedding + ground-truth pose).
//! `eval.n_queries` items are drawn without replacement as queries; the
//! rest form the gallery. Writes `eval_retrieval.csv` with one row per K
//! plus a mean row, and optionally an SVG of the hit rates over K.

use std::collections::BTreeSet;

use poseforge_core::data::{Dataset, FrameId};
use poseforge_core::eval::{query_outcome, reduce_outcomes, PoseVector, RetrievalItem};
use poseforge_core::net::ModelCheckpoint;
use poseforge_core::seed::{make_rng, sample_without_replacement};
use poseforge_core::synth::SynthGroundTruth;

use crate::config::PipelineConfig;
use crate::formats::csvout::write_csv;
use crate::formats::svg::{line_plot, Series};

use super::artifacts::RunManifest;
use super::{load_checkpoint_checked, load_dataset_checked, require_input, CommandError, GT_NAME};

pub const CSV_NAME: &str = "eval_retrieval.csv";
pub const SVG_NAME: &str = "retrieval_plot.svg";

/// Builds one retrieval item per annotated frame, in (clip, frame) order.
pub(crate) fn collect_items(
    config: &PipelineConfig,
    dataset: &Dataset,
    gts: &[SynthGroundTruth],
    ckpt: &ModelCheckpoint,
) -> Result<Vec<RetrievalItem>, CommandError> {
    let hyper = config.train.hyper();
    let mut ids = BTreeSet::new();
    for gt in gts {
        let clip = dataset
            .clips()
            .iter()
            .find(|c| c.video_id() == gt.video_id)
            .expect("sidecar loader verified clip ids");
        for frame in clip.frames() {
            ids.insert(FrameId {
                video_id: gt.video_id.clone(),
                frame_index: frame.frame_index,
            });
        }
    }
    let embeddings =
        poseforge_core::eval::embed_frames(&ckpt.params, &hyper, dataset, &ids, config.train.batch_size)?;

    let mut items = Vec::new();
    for gt in gts {
        let clip = dataset
            .clips()
            .iter()
            .find(|c| c.video_id() == gt.video_id)
            .expect("sidecar loader verified clip ids");
        for (t, frame) in clip.frames().iter().enumerate() {
            let id = FrameId {
                video_id: gt.video_id.clone(),
                frame_index: frame.frame_index,
            };
            items.push(RetrievalItem {
                embedding: embeddings[&id].clone(),
                pose: PoseVector::from_annotation(&gt.poses[t]),
            });
        }
    }
    Ok(items)
}

/// Splits items into (queries, gallery) deterministically in the seed.
pub(crate) fn split_queries(
    items: Vec<RetrievalItem>,
    n_queries: usize,
    seed: u64,
) -> (Vec<RetrievalItem>, Vec<RetrievalItem>) {
    let mut rng = make_rng(seed, "eval.queries");
    let chosen = sample_without_replacement(&mut rng, items.len(), n_queries.min(items.len()));
    let chosen_set: BTreeSet<usize> = chosen.iter().copied().collect();
    let mut queries = Vec::new();
    let mut gallery = Vec::new();
    for (i, item) in items.into_iter().enumerate() {
        if chosen_set.contains(&i) {
            queries.push(item);
        } else {
            gallery.push(item);
        }
    }
    (queries, gallery)
}

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
        return Err(poseforge_core::eval::EvalError::NoQueries.into());
    }
    if gallery.len() <= config.retrieval.nn_rank_cutoff {
        return Err(poseforge_core::eval::EvalError::TestSetTooSmall {
            len: gallery.len(),
            cutoff: config.retrieval.nn_rank_cutoff,
        }
        .into());
    }
    // Per-query outcomes are pure; the reduction is order-fixed, so the
    // report is identical regardless of how this loop would be scheduled.
    let outcomes: Vec<_> = queries.iter().map(|q| query_outcome(q, &gallery, &config.retrieval)).collect();
    let report = reduce_outcomes(&outcomes, &config.retrieval);

    let mut rows: Vec<Vec<String>> = report
        .per_k
        .iter()
        .map(|m| {
            vec![
                m.k.to_string(),
                m.mean_pose_distance.to_string(),
                m.hitrate_nn.to_string(),
                m.hitrate_rel.to_string(),
            ]
        })
        .collect();
    let n = report.per_k.len() as f64;
    let mean = |f: fn(&poseforge_core::eval::KMetrics) -> f64| {
        report.per_k.iter().map(f).sum::<f64>() / n
    };
    rows.push(vec![
        "mean".to_string(),
        mean(|m| m.mean_pose_distance).to_string(),
        mean(|m| m.hitrate_nn).to_string(),
        mean(|m| m.hitrate_rel).to_string(),
    ]);
    let csv_path = config.out_dir.join(CSV_NAME);
    write_csv(
        &csv_path,
        &["k", "mean_pose_distance", "hitrate_nn", "hitrate_rel"],
        &rows,
    )?;

    let mut manifest = RunManifest::new("eval-retrieval", &config.out_dir);
    manifest.record(&config.out_dir, &csv_path)?;
    if config.svg {
        let series = [
            Series {
                name: "hitrate_nn".to_string(),
                points: report.per_k.iter().map(|m| (m.k as f64, m.hitrate_nn)).collect(),
            },
            Series {
                name: "hitrate_rel".to_string(),
                points: report.per_k.iter().map(|m| (m.k as f64, m.hitrate_rel)).collect(),
            },
        ];
        let svg_path = config.out_dir.join(SVG_NAME);
        line_plot(&svg_path, "retrieval hit rates", "K", "hit rate", &series)?;
        manifest.record(&config.out_dir, &svg_path)?;
    }
    manifest.write(config)?;
    println!(
        "eval-retrieval: {} queries against {} gallery items into {}",
        queries.len(),
        gallery.len(),
        csv_path.display()
    );
    Ok(())
}
