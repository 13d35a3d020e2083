//! Repetition mining: find frames that repeat a pose by reading streaks in
//! the self-similarity matrix of embeddings, turn them into extra
//! similar/dissimilar tuples, and alternate mining with retraining.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::curriculum::CurriculumSchedule;
use crate::data::{DataError, Dataset, FrameId, VideoClip};
#[allow(unused_imports)]
use crate::math::FloatMath;
use crate::net::{
    embed_forward, images_to_batch, train_from, ConvNetParams, LossRecord, ModelCheckpoint,
    NetHyper, TrainConfig, TrainError, TrainingPool, EMBED_DIM, INPUT_SIZE,
};
use crate::sampling::{SamplerConfig, TemporalTuple};
use crate::seed::{make_rng, sample_without_replacement};

/// Mining parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct MinerConfig {
    /// Side of the diagonal averaging kernel (odd).
    pub kernel_size: usize,
    /// Half-width of the excluded near-diagonal band, in frames.
    pub band: usize,
    /// Distance percentile (of out-of-band entries) used as the candidate
    /// threshold. Must lie strictly between 0 and 50.
    pub threshold_percentile: f64,
    /// Minimum frame distance between any two members of a group.
    pub min_separation: usize,
    /// Negatives must keep this distance from every group member.
    pub group_gap: usize,
}

impl Default for MinerConfig {
    fn default() -> Self {
        Self {
            kernel_size: 5,
            band: 5,
            threshold_percentile: 10.0,
            min_separation: 5,
            group_gap: 3,
        }
    }
}

impl MinerConfig {
    pub fn validate(&self) -> Result<(), RepetitionError> {
        if self.kernel_size == 0 || self.kernel_size % 2 == 0 {
            return Err(RepetitionError::BadConfig {
                what: "kernel_size must be odd and positive",
            });
        }
        if self.band == 0 {
            return Err(RepetitionError::BadConfig {
                what: "band must be at least 1",
            });
        }
        if !(self.threshold_percentile > 0.0 && self.threshold_percentile < 50.0) {
            return Err(RepetitionError::BadConfig {
                what: "threshold_percentile must lie in (0, 50)",
            });
        }
        if self.min_separation == 0 {
            return Err(RepetitionError::BadConfig {
                what: "min_separation must be at least 1",
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RepetitionError {
    #[error("invalid miner config: {what}")]
    BadConfig { what: &'static str },
    #[error("{video_id}: embedding row {row} is not unit-norm; normalize before mining")]
    NotNormalized { video_id: String, row: usize },
    #[error("{video_id}: {n} frames are too few for a self-similarity matrix")]
    TooFewFrames { video_id: String, n: usize },
    #[error("{video_id}: matrix side {n} is smaller than the filter kernel {kernel_size}")]
    MatrixTooSmall {
        video_id: String,
        n: usize,
        kernel_size: usize,
    },
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Per-frame embedding rows for one video.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSequence {
    pub video_id: String,
    n: usize,
    dim: usize,
    data: Vec<f32>,
    normalized: bool,
}

impl EmbeddingSequence {
    /// Wraps raw (unnormalized) rows; `data` is row-major `n x dim`.
    pub fn from_rows(video_id: String, n: usize, dim: usize, data: Vec<f32>) -> Self {
        assert_eq!(data.len(), n * dim, "row data does not cover n x dim");
        assert!(dim > 0, "embedding dimension must be positive");
        Self {
            video_id,
            n,
            dim,
            data,
            normalized: false,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn normalized(&self) -> bool {
        self.normalized
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Scales every row to unit Euclidean norm. Rows with (near-)zero norm
    /// are left as they are; [`self_similarity`] will reject them by name.
    pub fn normalize(mut self) -> Self {
        for i in 0..self.n {
            let row = &mut self.data[i * self.dim..(i + 1) * self.dim];
            let norm = row.iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>().sqrt();
            if norm > 1e-12 {
                for v in row {
                    *v = (*v as f64 / norm) as f32;
                }
            }
        }
        self.normalized = true;
        self
    }
}

/// Pairwise embedding distances of one video: symmetric, zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SelfSimilarityMatrix {
    pub video_id: String,
    n: usize,
    distances: Vec<f32>,
}

impl SelfSimilarityMatrix {
    /// Wraps an externally computed matrix (used by file loaders and
    /// tests); `distances` is row-major `n x n`.
    pub fn from_raw(video_id: String, n: usize, distances: Vec<f32>) -> Self {
        assert_eq!(distances.len(), n * n, "matrix data does not cover n x n");
        Self {
            video_id,
            n,
            distances,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f32 {
        self.distances[i * self.n + j]
    }

    pub fn values(&self) -> &[f32] {
        &self.distances
    }
}

/// A query frame with the distant frames detected as near-duplicates.
/// Indices are frame positions within the clip.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepetitionGroup {
    pub video_id: String,
    pub anchor_index: usize,
    /// Ascending, nonempty, excludes the anchor, pairwise and
    /// anchor-separated by at least `min_separation`.
    pub repeat_indices: Vec<usize>,
}

/// All pairwise Euclidean distances between rows.
pub fn self_similarity(emb: &EmbeddingSequence) -> Result<SelfSimilarityMatrix, RepetitionError> {
    if emb.n < 2 {
        return Err(RepetitionError::TooFewFrames {
            video_id: emb.video_id.clone(),
            n: emb.n,
        });
    }
    if !emb.normalized {
        return Err(RepetitionError::NotNormalized {
            video_id: emb.video_id.clone(),
            row: 0,
        });
    }
    for i in 0..emb.n {
        let norm: f64 = emb.row(i).iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>();
        if (norm.sqrt() - 1.0).abs() > 1e-5 {
            return Err(RepetitionError::NotNormalized {
                video_id: emb.video_id.clone(),
                row: i,
            });
        }
    }

    let n = emb.n;
    let mut d = vec![0.0f32; n * n];
    for i in 0..n {
        let ri = emb.row(i);
        for j in i + 1..n {
            let rj = emb.row(j);
            let dist = ri
                .iter()
                .zip(rj)
                .map(|(&a, &b)| {
                    let diff = a as f64 - b as f64;
                    diff * diff
                })
                .sum::<f64>()
                .sqrt() as f32;
            d[i * n + j] = dist;
            d[j * n + i] = dist;
        }
    }
    Ok(SelfSimilarityMatrix {
        video_id: emb.video_id.clone(),
        n,
        distances: d,
    })
}

/// Averages along the main-diagonal direction with replicate padding:
/// `out[i][j] = mean over t in [-h,h] of m[clamp(i+t)][clamp(j+t)]`.
///
/// This suppresses isolated off-diagonal outliers while preserving the
/// diagonal streaks that mark repetitions.
pub fn filter_diagonal(
    m: &SelfSimilarityMatrix,
    cfg: &MinerConfig,
) -> Result<SelfSimilarityMatrix, RepetitionError> {
    cfg.validate()?;
    let n = m.n;
    let k = cfg.kernel_size;
    if n < k {
        return Err(RepetitionError::MatrixTooSmall {
            video_id: m.video_id.clone(),
            n,
            kernel_size: k,
        });
    }
    let h = (k / 2) as isize;
    let clamp = |v: isize| v.clamp(0, n as isize - 1) as usize;
    let mut out = vec![0.0f32; n * n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0f64;
            for t in -h..=h {
                let ii = clamp(i as isize + t);
                let jj = clamp(j as isize + t);
                acc += m.distances[ii * n + jj] as f64;
            }
            out[i * n + j] = (acc / k as f64) as f32;
        }
    }
    Ok(SelfSimilarityMatrix {
        video_id: m.video_id.clone(),
        n,
        distances: out,
    })
}

/// Nearest-rank percentile of the out-of-band entries, or `None` when the
/// band excludes everything.
fn out_of_band_percentile(m: &SelfSimilarityMatrix, band: usize, percentile: f64) -> Option<f32> {
    let n = m.n;
    let mut values: Vec<f32> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i.abs_diff(j) >= band {
                values.push(m.distances[i * n + j]);
            }
        }
    }
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.partial_cmp(b).expect("distances are finite"));
    let rank = ((percentile / 100.0 * values.len() as f64).ceil() as usize).max(1);
    Some(values[rank - 1])
}

/// Finds, per row, the distant frames most similar to the query frame.
///
/// Thresholds the filtered matrix at the configured percentile of
/// out-of-band entries, keeps candidates that are local minima of their
/// row (maxima of similarity), and greedily selects them in ascending
/// distance order under the separation constraint.
pub fn mine_repetitions(
    filtered: &SelfSimilarityMatrix,
    cfg: &MinerConfig,
) -> Result<Vec<RepetitionGroup>, RepetitionError> {
    cfg.validate()?;
    let n = filtered.n;
    let theta = match out_of_band_percentile(filtered, cfg.band, cfg.threshold_percentile) {
        Some(t) => t,
        None => return Ok(Vec::new()),
    };

    let mut groups = Vec::new();
    for i in 0..n {
        let row = &filtered.distances[i * n..(i + 1) * n];
        // Candidates: far enough from the diagonal, below the threshold,
        // and local minima of the whole row (plateau edges count).
        let mut candidates: Vec<usize> = (0..n)
            .filter(|&j| i.abs_diff(j) >= cfg.band && row[j] <= theta)
            .filter(|&j| {
                let left_ok = j == 0 || row[j] <= row[j - 1];
                let right_ok = j == n - 1 || row[j] <= row[j + 1];
                left_ok && right_ok
            })
            .collect();
        candidates.sort_by(|&a, &b| {
            row[a]
                .partial_cmp(&row[b])
                .expect("distances are finite")
                .then(a.cmp(&b))
        });

        let mut picked: Vec<usize> = Vec::new();
        for j in candidates {
            let clear_of_anchor = i.abs_diff(j) >= cfg.min_separation;
            let clear_of_picked = picked.iter().all(|&p| p.abs_diff(j) >= cfg.min_separation);
            if clear_of_anchor && clear_of_picked {
                picked.push(j);
            }
        }
        if !picked.is_empty() {
            picked.sort_unstable();
            groups.push(RepetitionGroup {
                video_id: filtered.video_id.clone(),
                anchor_index: i,
                repeat_indices: picked,
            });
        }
    }
    Ok(groups)
}

/// Frame positions eligible as negatives for a group: strictly between
/// consecutive sorted members and at least `group_gap` from every member.
fn eligible_negatives(group: &RepetitionGroup, group_gap: usize) -> Vec<usize> {
    let mut members: Vec<usize> = group.repeat_indices.clone();
    members.push(group.anchor_index);
    members.sort_unstable();
    let mut eligible = Vec::new();
    for pair in members.windows(2) {
        for j in pair[0] + 1..pair[1] {
            if members.iter().all(|&m| m.abs_diff(j) >= group_gap) {
                eligible.push(j);
            }
        }
    }
    eligible
}

/// Converts repetition groups into temporal-head training tuples.
///
/// Each (anchor, repeat) pair becomes a positive; each positive draws up
/// to `negatives_per_positive` negatives (without replacement) from the
/// gaps between group members. Deterministic in `sampler_cfg.seed`.
pub fn sample_repetition_tuples(
    groups: &[RepetitionGroup],
    cfg: &MinerConfig,
    sampler_cfg: &SamplerConfig,
) -> Vec<TemporalTuple> {
    let mut tuples = Vec::new();
    for group in groups {
        let eligible = eligible_negatives(group, cfg.group_gap);
        let mut rng = make_rng(
            sampler_cfg.seed,
            &format!("repneg.{}.{}", group.video_id, group.anchor_index),
        );
        let id = |index: usize| FrameId {
            video_id: group.video_id.clone(),
            frame_index: index as u32,
        };
        for &r in &group.repeat_indices {
            tuples.push(TemporalTuple {
                anchor: id(group.anchor_index),
                candidate: id(r),
                delta_t: r as i32 - group.anchor_index as i32,
                label: true,
            });
            let take = sampler_cfg.negatives_per_positive.min(eligible.len());
            for pick in sample_without_replacement(&mut rng, eligible.len(), take) {
                let j = eligible[pick];
                tuples.push(TemporalTuple {
                    anchor: id(group.anchor_index),
                    candidate: id(j),
                    delta_t: j as i32 - group.anchor_index as i32,
                    label: false,
                });
            }
        }
    }
    tuples
}

/// Embeds every frame of a clip (person crop, shared conv stack) and
/// L2-normalizes the rows.
pub fn embed_clip(
    params: &ConvNetParams,
    hyper: &NetHyper,
    clip: &VideoClip,
    batch_size: usize,
) -> Result<EmbeddingSequence, RepetitionError> {
    assert!(batch_size > 0, "batch_size must be positive");
    let n = clip.len();
    let mut data = Vec::with_capacity(n * EMBED_DIM);
    for chunk in clip.frames().chunks(batch_size) {
        let mut crops = Vec::with_capacity(chunk.len());
        for frame in chunk {
            crops.push(frame.crop_resize(&frame.person_box, INPUT_SIZE as u32)?);
        }
        let batch = images_to_batch(&crops.iter().collect::<Vec<_>>());
        let (z, _) = embed_forward(params, hyper, &batch, false);
        data.extend(z.data().iter().map(|&v| v as f32));
    }
    Ok(EmbeddingSequence::from_rows(clip.video_id().into(), n, EMBED_DIM, data).normalize())
}

/// Remaps group indices (clip positions) to actual frame indices so the
/// tuples reference real frames even in clips with gaps.
pub fn positions_to_frame_ids(clip: &VideoClip, tuples: &mut [TemporalTuple]) {
    for t in tuples.iter_mut() {
        let a = clip.frames()[t.anchor.frame_index as usize].frame_index;
        let c = clip.frames()[t.candidate.frame_index as usize].frame_index;
        t.anchor.frame_index = a;
        t.candidate.frame_index = c;
        t.delta_t = c as i32 - a as i32;
    }
}

/// Result of [`bootstrap`]: the augmented pool, the retrained model, and
/// per-round diagnostics.
#[derive(Debug, Clone)]
pub struct BootstrapOutcome {
    pub pool: TrainingPool,
    pub checkpoint: ModelCheckpoint,
    /// Mined groups per round.
    pub groups: Vec<Vec<RepetitionGroup>>,
    /// Loss log of each retraining round.
    pub loss_logs: Vec<Vec<LossRecord>>,
}

/// Alternates repetition mining with retraining.
///
/// Each round embeds every clip with the current model, mines repetition
/// groups, converts them to tuples, adds the tuples to the first
/// curriculum block (active from iteration 0 of the retrain), and
/// continues training for `retrain_iterations`. `rounds = 0` returns the
/// inputs unchanged.
#[allow(clippy::too_many_arguments)]
pub fn bootstrap(
    checkpoint: &ModelCheckpoint,
    dataset: &Dataset,
    schedule: &CurriculumSchedule,
    pool: &TrainingPool,
    miner_cfg: &MinerConfig,
    sampler_cfg: &SamplerConfig,
    retrain_iterations: u32,
    rounds: u32,
) -> Result<BootstrapOutcome, RepetitionError> {
    miner_cfg.validate()?;
    let mut current = checkpoint.clone();
    let mut pool = pool.clone();
    let mut all_groups = Vec::new();
    let mut loss_logs = Vec::new();

    for _ in 0..rounds {
        let hyper = current.config.hyper();
        let mut mined = Vec::new();
        let mut round_groups = Vec::new();
        for clip in dataset.clips() {
            let emb = embed_clip(&current.params, &hyper, clip, current.config.batch_size)?;
            let ssm = self_similarity(&emb)?;
            let filtered = filter_diagonal(&ssm, miner_cfg)?;
            let groups = mine_repetitions(&filtered, miner_cfg)?;
            let mut tuples = sample_repetition_tuples(&groups, miner_cfg, sampler_cfg);
            positions_to_frame_ids(clip, &mut tuples);
            mined.extend(tuples);
            round_groups.extend(groups);
        }
        pool = pool.with_mined(&mined, 0);
        all_groups.push(round_groups);

        let cfg = TrainConfig {
            total_iterations: retrain_iterations,
            ..current.config.clone()
        };
        let (next, log) = train_from(
            current.params,
            current.adam,
            dataset,
            schedule,
            &pool,
            &cfg,
        )?;
        loss_logs.push(log);
        current = next;
    }

    Ok(BootstrapOutcome {
        pool,
        checkpoint: current,
        groups: all_groups,
        loss_logs,
    })
}
