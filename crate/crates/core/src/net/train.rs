//! The training loop: curriculum-gated batch assembly, joint loss,
//! backprop, Adam. Deterministic in the config seed.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use super::adam::{adam_step, AdamConfig, AdamState};
use super::layers::{joint_loss, sigmoid_bce};
use super::model::{
    backward_spatial, backward_temporal, forward_spatial_train, forward_temporal_train,
    images_to_batch, ConvNetParams, Gradients, NetHyper, INPUT_SIZE,
};
use super::tensor::TensorF64;
use crate::curriculum::CurriculumSchedule;
use crate::data::{DataError, Dataset, Frame, FrameId};
use crate::image::GrayImage;
use crate::sampling::{SpatialSample, TemporalTuple};
use crate::seed::make_rng;

/// Which auxiliary tasks contribute loss (ablation switch).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskSelection {
    Temporal,
    Spatial,
    Both,
}

/// Everything the training loop needs to know.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub negatives_per_positive: usize,
    pub base_lr: f64,
    pub conv_lr: f64,
    pub spatial_loss_weight: f64,
    pub total_iterations: u32,
    pub leaky_slope: f64,
    pub bn_momentum: f64,
    pub bn_epsilon: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_epsilon: f64,
    pub tasks: TaskSelection,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 48,
            negatives_per_positive: 3,
            base_lr: 1e-4,
            conv_lr: 1e-5,
            spatial_loss_weight: 0.1,
            total_iterations: 2000,
            leaky_slope: 0.1,
            bn_momentum: 0.9,
            bn_epsilon: 1e-5,
            beta1: 0.9,
            beta2: 0.999,
            adam_epsilon: 1e-8,
            tasks: TaskSelection::Both,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let group = 1 + self.negatives_per_positive;
        if self.batch_size == 0 || self.batch_size % group != 0 {
            return Err(TrainError::BadConfig {
                what: "batch_size must be a positive multiple of 1 + negatives_per_positive",
            });
        }
        if self.total_iterations == 0 {
            return Err(TrainError::BadConfig {
                what: "total_iterations must be positive",
            });
        }
        for (v, what) in [
            (self.base_lr, "base_lr must be positive and finite"),
            (self.conv_lr, "conv_lr must be positive and finite"),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(TrainError::BadConfig { what });
            }
        }
        if !(self.spatial_loss_weight.is_finite() && self.spatial_loss_weight >= 0.0) {
            return Err(TrainError::BadConfig {
                what: "spatial_loss_weight must be non-negative and finite",
            });
        }
        Ok(())
    }

    pub fn hyper(&self) -> NetHyper {
        NetHyper {
            leaky_slope: self.leaky_slope,
            bn_momentum: self.bn_momentum,
            bn_epsilon: self.bn_epsilon,
        }
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            base_lr: self.base_lr,
            conv_lr: self.conv_lr,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.adam_epsilon,
        }
    }

    /// Positive samples per batch; negatives fill the rest.
    pub fn positives_per_batch(&self) -> usize {
        self.batch_size / (1 + self.negatives_per_positive)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrainError {
    #[error("invalid training config: {what}")]
    BadConfig { what: &'static str },
    #[error("iteration {iteration}: no active {what} samples (curriculum pool empty)")]
    EmptyActivePool { iteration: u32, what: &'static str },
    #[error("iteration {iteration}: loss is not finite, aborting")]
    NonFiniteLoss { iteration: u32 },
    #[error("iteration {iteration}: parameters left the finite range")]
    NonFiniteParams { iteration: u32 },
    #[error("sample references unknown frame {video_id}:{frame_index}")]
    MissingFrame { video_id: String, frame_index: u32 },
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Items tagged with the curriculum block they unlock at, stored in
/// ascending block order so the active subset is a prefix.
#[derive(Debug, Clone)]
pub struct BlockPool<T> {
    items: Vec<T>,
    blocks: Vec<usize>,
}

impl<T> BlockPool<T> {
    fn from_tagged(mut tagged: Vec<(usize, T)>) -> Self {
        tagged.sort_by_key(|(b, _)| *b);
        let blocks = tagged.iter().map(|(b, _)| *b).collect();
        let items = tagged.into_iter().map(|(_, t)| t).collect();
        Self { items, blocks }
    }

    /// Items whose block is released at or before `released`.
    pub fn active(&self, released: usize) -> &[T] {
        &self.items[..self.blocks.partition_point(|&b| b <= released)]
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// Sampled tuples and crops, split by label and gated by curriculum block.
#[derive(Debug, Clone)]
pub struct TrainingPool {
    pub temporal_pos: BlockPool<TemporalTuple>,
    pub temporal_neg: BlockPool<TemporalTuple>,
    pub spatial_pos: BlockPool<SpatialSample>,
    pub spatial_neg: BlockPool<SpatialSample>,
}

impl TrainingPool {
    /// Tags every sample with the curriculum block of its anchor frame.
    /// Samples whose frame is not scheduled are dropped; the count of
    /// dropped samples is returned alongside.
    pub fn from_samples(
        temporal: &[TemporalTuple],
        spatial: &[SpatialSample],
        schedule: &CurriculumSchedule,
    ) -> (Self, usize) {
        let mut block_by_id: alloc::collections::BTreeMap<&FrameId, usize> =
            alloc::collections::BTreeMap::new();
        for b in 0..schedule.n_blocks() {
            for e in schedule.block(b) {
                block_by_id.insert(&e.id, b);
            }
        }

        let mut skipped = 0usize;
        let mut tp = Vec::new();
        let mut tn = Vec::new();
        for t in temporal {
            match block_by_id.get(&t.anchor) {
                Some(&b) => {
                    if t.label {
                        tp.push((b, t.clone()));
                    } else {
                        tn.push((b, t.clone()));
                    }
                }
                None => skipped += 1,
            }
        }
        let mut sp = Vec::new();
        let mut sn = Vec::new();
        for s in spatial {
            match block_by_id.get(&s.frame) {
                Some(&b) => {
                    if s.label {
                        sp.push((b, s.clone()));
                    } else {
                        sn.push((b, s.clone()));
                    }
                }
                None => skipped += 1,
            }
        }
        (
            Self {
                temporal_pos: BlockPool::from_tagged(tp),
                temporal_neg: BlockPool::from_tagged(tn),
                spatial_pos: BlockPool::from_tagged(sp),
                spatial_neg: BlockPool::from_tagged(sn),
            },
            skipped,
        )
    }

    /// Adds mined repetition tuples, unlocked from the given block on
    /// (bootstrap inserts them at block 0 so they train from the start).
    pub fn with_mined(self, mined: &[TemporalTuple], block: usize) -> Self {
        let Self {
            temporal_pos,
            temporal_neg,
            spatial_pos,
            spatial_neg,
        } = self;
        let mut tp: Vec<(usize, TemporalTuple)> = temporal_pos
            .blocks
            .into_iter()
            .zip(temporal_pos.items)
            .collect();
        let mut tn: Vec<(usize, TemporalTuple)> = temporal_neg
            .blocks
            .into_iter()
            .zip(temporal_neg.items)
            .collect();
        for t in mined {
            if t.label {
                tp.push((block, t.clone()));
            } else {
                tn.push((block, t.clone()));
            }
        }
        Self {
            temporal_pos: BlockPool::from_tagged(tp),
            temporal_neg: BlockPool::from_tagged(tn),
            spatial_pos,
            spatial_neg,
        }
    }
}

/// One loss-log line.
#[derive(Debug, Clone, PartialEq)]
pub struct LossRecord {
    pub iteration: u32,
    pub l_temporal: f64,
    pub l_spatial: f64,
    pub total: f64,
}

/// Trained model state: parameters, optimizer state, iteration count, and
/// the exact config, which together round-trip through the checkpoint file.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelCheckpoint {
    pub version: u32,
    pub params: ConvNetParams,
    pub adam: AdamState,
    pub iteration: u64,
    pub config: TrainConfig,
}

/// Current checkpoint format version.
pub const CHECKPOINT_VERSION: u32 = 1;

fn person_crop(frame: &Frame) -> Result<GrayImage, TrainError> {
    Ok(frame.crop_resize(&frame.person_box, INPUT_SIZE as u32)?)
}

fn lookup<'d>(dataset: &'d Dataset, id: &FrameId) -> Result<&'d Frame, TrainError> {
    dataset.frame(id).ok_or_else(|| TrainError::MissingFrame {
        video_id: id.video_id.clone(),
        frame_index: id.frame_index,
    })
}

fn draw<'p, T>(
    pool: &'p [T],
    count: usize,
    rng: &mut impl Rng,
    iteration: u32,
    what: &'static str,
) -> Result<Vec<&'p T>, TrainError> {
    if pool.is_empty() {
        return Err(TrainError::EmptyActivePool { iteration, what });
    }
    Ok((0..count).map(|_| &pool[rng.random_range(0..pool.len())]).collect())
}

struct TemporalBatch {
    anchors: TensorF64,
    candidates: TensorF64,
    labels: Vec<f64>,
}

fn temporal_batch(
    dataset: &Dataset,
    tuples: &[&TemporalTuple],
) -> Result<TemporalBatch, TrainError> {
    let mut anchor_imgs = Vec::with_capacity(tuples.len());
    let mut cand_imgs = Vec::with_capacity(tuples.len());
    let mut labels = Vec::with_capacity(tuples.len());
    for t in tuples {
        anchor_imgs.push(person_crop(lookup(dataset, &t.anchor)?)?);
        cand_imgs.push(person_crop(lookup(dataset, &t.candidate)?)?);
        labels.push(if t.label { 1.0 } else { 0.0 });
    }
    let anchors = images_to_batch(&anchor_imgs.iter().collect::<Vec<_>>());
    let candidates = images_to_batch(&cand_imgs.iter().collect::<Vec<_>>());
    Ok(TemporalBatch {
        anchors,
        candidates,
        labels,
    })
}

fn spatial_batch(
    dataset: &Dataset,
    samples: &[&SpatialSample],
) -> Result<(TensorF64, Vec<f64>), TrainError> {
    let mut imgs = Vec::with_capacity(samples.len());
    let mut labels = Vec::with_capacity(samples.len());
    for s in samples {
        let frame = lookup(dataset, &s.frame)?;
        imgs.push(frame.crop_resize(&s.crop, INPUT_SIZE as u32)?);
        labels.push(if s.label { 1.0 } else { 0.0 });
    }
    Ok((images_to_batch(&imgs.iter().collect::<Vec<_>>()), labels))
}

/// Runs the full training loop from a fresh initialization.
///
/// Each iteration draws `batch_size/(1+npp)` positive and the matching
/// negative counts for both tasks (uniform with replacement from the
/// curriculum's active pool), runs forward/backward, and applies one Adam
/// step. Aborts on a non-finite loss.
pub fn train(
    dataset: &Dataset,
    schedule: &CurriculumSchedule,
    pool: &TrainingPool,
    cfg: &TrainConfig,
) -> Result<(ModelCheckpoint, Vec<LossRecord>), TrainError> {
    let params = ConvNetParams::init(cfg.seed);
    train_from(params, AdamState::new(), dataset, schedule, pool, cfg)
}

/// Continues training from existing parameters and optimizer state
/// (bootstrap rounds resume from the previous round's checkpoint).
pub fn train_from(
    mut params: ConvNetParams,
    mut adam: AdamState,
    dataset: &Dataset,
    schedule: &CurriculumSchedule,
    pool: &TrainingPool,
    cfg: &TrainConfig,
) -> Result<(ModelCheckpoint, Vec<LossRecord>), TrainError> {
    cfg.validate()?;
    let hyper = cfg.hyper();
    let adam_cfg = cfg.adam();
    let n_pos = cfg.positives_per_batch();
    let n_neg = cfg.batch_size - n_pos;
    let weight = cfg.spatial_loss_weight;

    let mut log = Vec::with_capacity(cfg.total_iterations as usize);
    for iteration in 0..cfg.total_iterations {
        let released = schedule.released_blocks(iteration);
        let mut rng = make_rng(cfg.seed, &format!("train.batch.{iteration}"));

        let mut grads = Gradients::new();
        let mut l_temporal = 0.0;
        let mut l_spatial = 0.0;

        if cfg.tasks != TaskSelection::Spatial {
            let pos = draw(pool.temporal_pos.active(released), n_pos, &mut rng, iteration, "temporal positive")?;
            let neg = draw(pool.temporal_neg.active(released), n_neg, &mut rng, iteration, "temporal negative")?;
            let chosen: Vec<&TemporalTuple> = pos.into_iter().chain(neg).collect();
            let batch = temporal_batch(dataset, &chosen)?;
            let (logits, cache) =
                forward_temporal_train(&mut params, &hyper, &batch.anchors, &batch.candidates);
            let (_, loss, dlogits) = sigmoid_bce(&logits, &batch.labels);
            l_temporal = loss;
            backward_temporal(&params, &hyper, &cache, &dlogits, &mut grads);
        }

        if cfg.tasks != TaskSelection::Temporal {
            let pos = draw(pool.spatial_pos.active(released), n_pos, &mut rng, iteration, "spatial positive")?;
            let neg = draw(pool.spatial_neg.active(released), n_neg, &mut rng, iteration, "spatial negative")?;
            let chosen: Vec<&SpatialSample> = pos.into_iter().chain(neg).collect();
            let (imgs, labels) = spatial_batch(dataset, &chosen)?;
            let (logits, cache) = forward_spatial_train(&mut params, &hyper, &imgs);
            let (_, loss, dlogits) = sigmoid_bce(&logits, &labels);
            l_spatial = loss;
            // The spatial task enters the joint loss with reduced weight,
            // so its gradients scale by the same factor.
            let weighted: Vec<f64> = dlogits.iter().map(|g| g * weight).collect();
            backward_spatial(&params, &hyper, &cache, &weighted, &mut grads);
        }

        let total = joint_loss(l_temporal, l_spatial, weight);
        if !total.is_finite() {
            return Err(TrainError::NonFiniteLoss { iteration });
        }

        adam_step(&mut params, &grads, &mut adam, &adam_cfg);
        if iteration % 100 == 99 && !params.all_finite() {
            return Err(TrainError::NonFiniteParams { iteration });
        }

        log.push(LossRecord {
            iteration,
            l_temporal,
            l_spatial,
            total,
        });
    }

    if !params.all_finite() {
        return Err(TrainError::NonFiniteParams {
            iteration: cfg.total_iterations.saturating_sub(1),
        });
    }
    let iteration = adam.t;
    Ok((
        ModelCheckpoint {
            version: CHECKPOINT_VERSION,
            params,
            adam,
            iteration,
            config: cfg.clone(),
        },
        log,
    ))
}
