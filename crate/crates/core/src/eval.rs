//! Evaluation protocols: posture-separation AuC, pose retrieval
//! (mean pose distance and hit rates over K), nearest-neighbor pose
//! transfer, and the PCP / PCKh pose-estimation scores.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::data::{
    BenchmarkExemplar, DataError, Dataset, FrameId, Joint, PoseAnnotation, JOINT_COUNT,
};
#[allow(unused_imports)]
use crate::math::FloatMath;
use crate::net::{embed_forward, images_to_batch, ConvNetParams, NetHyper, EMBED_DIM, INPUT_SIZE};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("invalid retrieval config: {what}")]
    BadConfig { what: &'static str },
    #[error("AuC needs at least one positive and one negative score")]
    EmptyScores,
    #[error("no exemplars to evaluate")]
    NoExemplars,
    #[error("no queries to evaluate")]
    NoQueries,
    #[error("no embedding for frame {video_id}:{frame_index}")]
    MissingEmbedding { video_id: String, frame_index: u32 },
    #[error("frame {video_id}:{frame_index} is not in the dataset")]
    UnknownFrame { video_id: String, frame_index: u32 },
    #[error("test set of {len} items cannot satisfy a pose-rank cutoff of {cutoff}")]
    TestSetTooSmall { len: usize, cutoff: usize },
    #[error("every ground-truth part has zero length; nothing to evaluate")]
    NoEvaluableParts,
    #[error("ground-truth head segment has zero length")]
    ZeroHeadSegment,
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Knobs for the retrieval and pose-estimation protocols.
#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalConfig {
    /// Neighbor counts to report metrics at.
    pub k_values: Vec<usize>,
    /// A query counts as hit when a retrieval is among its this-many
    /// pose-space nearest neighbors.
    pub nn_rank_cutoff: usize,
    /// Relative-criterion margin in pose-distance units. The canonical
    /// margin of 10 is defined at a 227-pixel reference resolution and
    /// rescaled to this network's input size.
    pub rel_margin: f64,
    /// PCP endpoint threshold as a fraction of ground-truth part length.
    pub pcp_fraction: f64,
    /// PCKh threshold as a fraction of the head segment length.
    pub pckh_fraction: f64,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        Self {
            k_values: alloc::vec![1, 5, 10, 20],
            nn_rank_cutoff: 50,
            rel_margin: 10.0 * INPUT_SIZE as f64 / 227.0,
            pcp_fraction: 0.5,
            pckh_fraction: 0.5,
        }
    }
}

impl RetrievalConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        if self.k_values.is_empty() || self.k_values.contains(&0) {
            return Err(EvalError::BadConfig {
                what: "k_values must be nonempty and positive",
            });
        }
        if self.nn_rank_cutoff == 0 {
            return Err(EvalError::BadConfig {
                what: "nn_rank_cutoff must be positive",
            });
        }
        if !(self.rel_margin > 0.0 && self.rel_margin.is_finite()) {
            return Err(EvalError::BadConfig {
                what: "rel_margin must be positive and finite",
            });
        }
        if !(self.pcp_fraction > 0.0 && self.pcp_fraction.is_finite()) {
            return Err(EvalError::BadConfig {
                what: "pcp_fraction must be positive and finite",
            });
        }
        if !(self.pckh_fraction > 0.0 && self.pckh_fraction.is_finite()) {
            return Err(EvalError::BadConfig {
                what: "pckh_fraction must be positive and finite",
            });
        }
        Ok(())
    }
}

/// A pose expressed in the coordinates of the smallest square that
/// tightly encloses all joints, rescaled to the network input size.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseVector {
    pub joints: [(f32, f32); JOINT_COUNT],
}

impl PoseVector {
    /// Normalizes an annotated pose: the tight joint bounding square maps
    /// to `[0, INPUT_SIZE]` on both axes, preserving aspect ratio. A
    /// fully degenerate pose (all joints coincide) maps to the center.
    pub fn from_annotation(pose: &PoseAnnotation) -> Self {
        let mut min_x = f32::INFINITY;
        let mut max_x = f32::NEG_INFINITY;
        let mut min_y = f32::INFINITY;
        let mut max_y = f32::NEG_INFINITY;
        for &(x, y) in &pose.joints {
            min_x = min_x.min(x);
            max_x = max_x.max(x);
            min_y = min_y.min(y);
            max_y = max_y.max(y);
        }
        let side = (max_x - min_x).max(max_y - min_y).max(1e-6);
        let left = (min_x + max_x) / 2.0 - side / 2.0;
        let top = (min_y + max_y) / 2.0 - side / 2.0;
        let scale = INPUT_SIZE as f32 / side;
        let mut joints = [(0.0f32, 0.0f32); JOINT_COUNT];
        for (out, &(x, y)) in joints.iter_mut().zip(&pose.joints) {
            *out = ((x - left) * scale, (y - top) * scale);
        }
        Self { joints }
    }

    pub fn joint(&self, j: Joint) -> (f32, f32) {
        self.joints[j as usize]
    }
}

fn point_distance(a: (f32, f32), b: (f32, f32)) -> f64 {
    let dx = a.0 as f64 - b.0 as f64;
    let dy = a.1 as f64 - b.1 as f64;
    (dx * dx + dy * dy).sqrt()
}

/// Mean over joints of the per-joint Euclidean distance.
pub fn pose_distance(a: &PoseVector, b: &PoseVector) -> f64 {
    let sum: f64 = a
        .joints
        .iter()
        .zip(&b.joints)
        .map(|(&pa, &pb)| point_distance(pa, pb))
        .sum();
    sum / JOINT_COUNT as f64
}

/// Probability that a random positive outscores a random negative, ties
/// counted half (rank-sum formulation with average ranks).
pub fn roc_auc(pos: &[f64], neg: &[f64]) -> Result<f64, EvalError> {
    if pos.is_empty() || neg.is_empty() {
        return Err(EvalError::EmptyScores);
    }
    let mut combined: Vec<(f64, bool)> = pos
        .iter()
        .map(|&s| (s, true))
        .chain(neg.iter().map(|&s| (s, false)))
        .collect();
    combined.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("scores must not be NaN"));

    let mut rank_sum_pos = 0.0f64;
    let mut i = 0;
    while i < combined.len() {
        let mut j = i;
        while j < combined.len() && combined[j].0 == combined[i].0 {
            j += 1;
        }
        // Ranks are 1-based; a tie run i..j shares the average rank.
        let avg_rank = (i + 1 + j) as f64 / 2.0;
        for item in &combined[i..j] {
            if item.1 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j;
    }
    let n_pos = pos.len() as f64;
    let n_neg = neg.len() as f64;
    let u = rank_sum_pos - n_pos * (n_pos + 1.0) / 2.0;
    Ok(u / (n_pos * n_neg))
}

fn l2_normalized(v: &[f32]) -> Vec<f32> {
    let norm = v.iter().map(|&x| (x as f64) * (x as f64)).sum::<f64>().sqrt();
    if norm > 1e-12 {
        v.iter().map(|&x| (x as f64 / norm) as f32).collect()
    } else {
        v.to_vec()
    }
}

fn embedding_distance(a: &[f32], b: &[f32]) -> f64 {
    debug_assert_eq!(a.len(), b.len(), "embedding dimensions differ");
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Mean per-exemplar AuC, with similarity = negative Euclidean distance
/// between L2-normalized embeddings.
pub fn posture_auc_from_embeddings(
    exemplars: &[BenchmarkExemplar],
    embeddings: &BTreeMap<FrameId, Vec<f32>>,
) -> Result<f64, EvalError> {
    if exemplars.is_empty() {
        return Err(EvalError::NoExemplars);
    }
    let lookup = |id: &FrameId| -> Result<Vec<f32>, EvalError> {
        embeddings
            .get(id)
            .map(|v| l2_normalized(v))
            .ok_or_else(|| EvalError::MissingEmbedding {
                video_id: id.video_id.clone(),
                frame_index: id.frame_index,
            })
    };
    let mut sum = 0.0f64;
    for ex in exemplars {
        let query = lookup(&ex.query)?;
        let mut pos = Vec::with_capacity(ex.positives.len());
        for id in &ex.positives {
            pos.push(-embedding_distance(&query, &lookup(id)?));
        }
        let mut neg = Vec::with_capacity(ex.negatives.len());
        for id in &ex.negatives {
            neg.push(-embedding_distance(&query, &lookup(id)?));
        }
        sum += roc_auc(&pos, &neg)?;
    }
    Ok(sum / exemplars.len() as f64)
}

/// Embeds the listed frames (person crop through the conv stack, rows
/// L2-normalized), keyed by frame id.
pub fn embed_frames(
    params: &ConvNetParams,
    hyper: &NetHyper,
    dataset: &Dataset,
    ids: &BTreeSet<FrameId>,
    batch_size: usize,
) -> Result<BTreeMap<FrameId, Vec<f32>>, EvalError> {
    assert!(batch_size > 0, "batch_size must be positive");
    let ids: Vec<&FrameId> = ids.iter().collect();
    let mut out = BTreeMap::new();
    for chunk in ids.chunks(batch_size) {
        let mut crops = Vec::with_capacity(chunk.len());
        for id in chunk {
            let frame = dataset.frame(id).ok_or_else(|| EvalError::UnknownFrame {
                video_id: id.video_id.clone(),
                frame_index: id.frame_index,
            })?;
            crops.push(frame.crop_resize(&frame.person_box, INPUT_SIZE as u32)?);
        }
        let (z, _) = embed_forward(params, hyper, &images_to_batch(&crops.iter().collect::<Vec<_>>()), false);
        for (row, id) in chunk.iter().enumerate() {
            let raw: Vec<f32> = z.data()[row * EMBED_DIM..(row + 1) * EMBED_DIM]
                .iter()
                .map(|&v| v as f32)
                .collect();
            out.insert((*id).clone(), l2_normalized(&raw));
        }
    }
    Ok(out)
}

/// Evaluates a trained model on posture-comparison exemplars.
pub fn posture_auc(
    params: &ConvNetParams,
    hyper: &NetHyper,
    dataset: &Dataset,
    exemplars: &[BenchmarkExemplar],
    batch_size: usize,
) -> Result<f64, EvalError> {
    let mut ids = BTreeSet::new();
    for ex in exemplars {
        ids.insert(ex.query.clone());
        ids.extend(ex.positives.iter().cloned());
        ids.extend(ex.negatives.iter().cloned());
    }
    let embeddings = embed_frames(params, hyper, dataset, &ids, batch_size)?;
    posture_auc_from_embeddings(exemplars, &embeddings)
}

/// One item of a retrieval instance: its embedding and annotated pose.
#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalItem {
    pub embedding: Vec<f32>,
    pub pose: PoseVector,
}

/// Per-query retrieval outcome, one slot per configured K.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryOutcome {
    pub mean_pose_distance: Vec<f64>,
    pub hit_nn: Vec<bool>,
    pub hit_rel: Vec<bool>,
}

/// Metrics at one neighbor count.
#[derive(Debug, Clone, PartialEq)]
pub struct KMetrics {
    pub k: usize,
    pub mean_pose_distance: f64,
    pub hitrate_nn: f64,
    pub hitrate_rel: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalReport {
    pub per_k: Vec<KMetrics>,
}

/// Evaluates one query against the test set. Pure; callers may fan
/// queries out across threads and merge with [`reduce_outcomes`], which
/// is order-fixed by query index.
pub fn query_outcome(
    query: &RetrievalItem,
    test: &[RetrievalItem],
    cfg: &RetrievalConfig,
) -> QueryOutcome {
    let n = test.len();
    let embed_dist: Vec<f64> = test
        .iter()
        .map(|t| embedding_distance(&query.embedding, &t.embedding))
        .collect();
    let pose_dist: Vec<f64> = test
        .iter()
        .map(|t| pose_distance(&query.pose, &t.pose))
        .collect();

    // Embedding ranking; ties broken by lower index.
    let mut by_embed: Vec<usize> = (0..n).collect();
    by_embed.sort_by(|&a, &b| {
        embed_dist[a]
            .partial_cmp(&embed_dist[b])
            .expect("distances are finite")
            .then(a.cmp(&b))
    });
    // Pose ranking, same tie rule, for the NN criterion.
    let mut by_pose: Vec<usize> = (0..n).collect();
    by_pose.sort_by(|&a, &b| {
        pose_dist[a]
            .partial_cmp(&pose_dist[b])
            .expect("distances are finite")
            .then(a.cmp(&b))
    });
    let mut in_pose_top = alloc::vec![false; n];
    for &i in by_pose.iter().take(cfg.nn_rank_cutoff) {
        in_pose_top[i] = true;
    }
    let d_min = pose_dist[by_pose[0]];

    let mut outcome = QueryOutcome {
        mean_pose_distance: Vec::with_capacity(cfg.k_values.len()),
        hit_nn: Vec::with_capacity(cfg.k_values.len()),
        hit_rel: Vec::with_capacity(cfg.k_values.len()),
    };
    for &k in &cfg.k_values {
        let top = &by_embed[..k.min(n)];
        let mpd = top.iter().map(|&i| pose_dist[i]).sum::<f64>() / top.len() as f64;
        outcome.mean_pose_distance.push(mpd);
        outcome.hit_nn.push(top.iter().any(|&i| in_pose_top[i]));
        outcome
            .hit_rel
            .push(top.iter().any(|&i| pose_dist[i] <= d_min + cfg.rel_margin));
    }
    outcome
}

/// Averages per-query outcomes in query order.
pub fn reduce_outcomes(outcomes: &[QueryOutcome], cfg: &RetrievalConfig) -> RetrievalReport {
    let n = outcomes.len() as f64;
    let per_k = cfg
        .k_values
        .iter()
        .enumerate()
        .map(|(slot, &k)| {
            let mut mpd = 0.0f64;
            let mut nn = 0usize;
            let mut rel = 0usize;
            for o in outcomes {
                mpd += o.mean_pose_distance[slot];
                nn += o.hit_nn[slot] as usize;
                rel += o.hit_rel[slot] as usize;
            }
            KMetrics {
                k,
                mean_pose_distance: mpd / n,
                hitrate_nn: nn as f64 / n,
                hitrate_rel: rel as f64 / n,
            }
        })
        .collect();
    RetrievalReport { per_k }
}

/// Full retrieval protocol: rank the test set by embedding distance per
/// query and report mean pose distance and both hit rates at each K.
pub fn retrieval_metrics(
    queries: &[RetrievalItem],
    test: &[RetrievalItem],
    cfg: &RetrievalConfig,
) -> Result<RetrievalReport, EvalError> {
    cfg.validate()?;
    if queries.is_empty() {
        return Err(EvalError::NoQueries);
    }
    if test.len() <= cfg.nn_rank_cutoff {
        return Err(EvalError::TestSetTooSmall {
            len: test.len(),
            cutoff: cfg.nn_rank_cutoff,
        });
    }
    let outcomes: Vec<QueryOutcome> = queries.iter().map(|q| query_outcome(q, test, cfg)).collect();
    Ok(reduce_outcomes(&outcomes, cfg))
}

/// Predicts a query's pose as the pose of its embedding-nearest test
/// item; ties break toward the lower index.
pub fn nn_pose_transfer(query_embedding: &[f32], test: &[RetrievalItem]) -> PoseVector {
    assert!(!test.is_empty(), "pose transfer needs a nonempty test set");
    let mut best = 0usize;
    let mut best_dist = embedding_distance(query_embedding, &test[0].embedding);
    for (i, item) in test.iter().enumerate().skip(1) {
        let d = embedding_distance(query_embedding, &item.embedding);
        if d < best_dist {
            best = i;
            best_dist = d;
        }
    }
    test[best].pose.clone()
}

/// Body parts scored by PCP: head, torso diagonals, and the upper and
/// lower segments of each limb.
pub fn default_pcp_parts() -> [(Joint, Joint); 11] {
    use Joint::*;
    [
        (Head, Neck),
        (Neck, LeftHip),
        (Neck, RightHip),
        (LeftShoulder, LeftElbow),
        (RightShoulder, RightElbow),
        (LeftElbow, LeftWrist),
        (RightElbow, RightWrist),
        (LeftHip, LeftKnee),
        (RightHip, RightKnee),
        (LeftKnee, LeftAnkle),
        (RightKnee, RightAnkle),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartStatus {
    Correct,
    Incorrect,
    /// Ground-truth part had zero length and was left out of the mean.
    SkippedZeroLength,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcpResult {
    pub parts: Vec<(Joint, Joint, PartStatus)>,
    /// Fraction correct among evaluated (non-skipped) parts.
    pub mean: f64,
    pub skipped: usize,
}

/// A part is correct when both of its endpoints lie within
/// `fraction x ground-truth part length` of the ground truth.
pub fn pcp(
    predicted: &PoseVector,
    gt: &PoseVector,
    parts: &[(Joint, Joint)],
    fraction: f64,
) -> Result<PcpResult, EvalError> {
    let mut out = Vec::with_capacity(parts.len());
    let mut correct = 0usize;
    let mut evaluated = 0usize;
    let mut skipped = 0usize;
    for &(a, b) in parts {
        let len = point_distance(gt.joint(a), gt.joint(b));
        if len <= 1e-9 {
            skipped += 1;
            out.push((a, b, PartStatus::SkippedZeroLength));
            continue;
        }
        evaluated += 1;
        let err_a = point_distance(predicted.joint(a), gt.joint(a));
        let err_b = point_distance(predicted.joint(b), gt.joint(b));
        let ok = err_a <= fraction * len && err_b <= fraction * len;
        correct += ok as usize;
        out.push((a, b, if ok { PartStatus::Correct } else { PartStatus::Incorrect }));
    }
    if evaluated == 0 {
        return Err(EvalError::NoEvaluableParts);
    }
    Ok(PcpResult {
        parts: out,
        mean: correct as f64 / evaluated as f64,
        skipped,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PckhResult {
    pub per_joint: [bool; JOINT_COUNT],
    /// Fraction of joints within the head-scaled threshold.
    pub total: f64,
}

/// A joint is correct when its error is within
/// `fraction x head-segment length` of the ground truth.
pub fn pckh(predicted: &PoseVector, gt: &PoseVector, fraction: f64) -> Result<PckhResult, EvalError> {
    let head_len = point_distance(gt.joint(Joint::Head), gt.joint(Joint::Neck));
    if head_len <= 1e-9 {
        return Err(EvalError::ZeroHeadSegment);
    }
    let mut per_joint = [false; JOINT_COUNT];
    let mut correct = 0usize;
    for (j, slot) in per_joint.iter_mut().enumerate() {
        let err = point_distance(predicted.joints[j], gt.joints[j]);
        *slot = err <= fraction * head_len;
        correct += *slot as usize;
    }
    Ok(PckhResult {
        per_joint,
        total: correct as f64 / JOINT_COUNT as f64,
    })
}
