//! Labeled tuple samplers for the two self-supervision tasks.
//!
//! Temporal tuples pair an anchor frame with a candidate at a signed offset:
//! the positive sits exactly `tau_plus` frames ahead, negatives fall in
//! `[tau_neg_min, tau_neg_max]` frames away on either side. Spatial samples
//! pair a frame with a random crop labeled by its overlap with the person
//! box. Offsets or overlaps between the class ranges are rejected, keeping a
//! deliberate gap between similar and dissimilar.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

#[allow(unused_imports)]
use crate::math::FloatMath;

use crate::data::{Frame, FrameId, VideoClip};
use crate::geom::BoundingBox;
use crate::seed::{make_rng, sample_without_replacement};
use rand::Rng;

/// Ranges and budgets for tuple sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    /// Offset of the one positive candidate, in frames ahead of the anchor.
    pub tau_plus: u32,
    /// Negative offsets satisfy `tau_neg_min <= |delta| <= tau_neg_max`.
    pub tau_neg_min: u32,
    pub tau_neg_max: u32,
    /// Closed IoU interval labeling a crop as overlapping the person.
    pub sigma_pos: (f32, f32),
    /// Closed IoU interval labeling a crop as off-person.
    pub sigma_neg: (f32, f32),
    pub negatives_per_positive: usize,
    /// Rejection-sampling budget per crop class.
    pub max_crop_attempts: usize,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            tau_plus: 4,
            tau_neg_min: 8,
            tau_neg_max: 16,
            sigma_pos: (0.65, 0.95),
            sigma_neg: (0.25, 0.55),
            negatives_per_positive: 3,
            max_crop_attempts: 200,
            seed: 0,
        }
    }
}

/// Default anchor spacing for [`sample_temporal_tuples`].
pub const DEFAULT_ANCHOR_STRIDE: u32 = 5;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SamplerConfigError {
    #[error("temporal offsets must satisfy 0 < tau_plus < tau_neg_min <= tau_neg_max, got {tau_plus}/{tau_neg_min}/{tau_neg_max}")]
    BadTemporalRanges {
        tau_plus: u32,
        tau_neg_min: u32,
        tau_neg_max: u32,
    },
    #[error("IoU interval {name} = [{lo}, {hi}] is not an ordered subinterval of [0, 1]")]
    BadIouInterval {
        name: &'static str,
        lo: String,
        hi: String,
    },
    #[error("sigma ranges must leave a gap: sigma_neg.max {neg_hi} >= sigma_pos.min {pos_lo}")]
    NoClassGap { neg_hi: String, pos_lo: String },
    #[error("negatives_per_positive must be at least 1")]
    NoNegatives,
    #[error("max_crop_attempts must be at least 1")]
    NoAttempts,
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<(), SamplerConfigError> {
        if !(self.tau_plus > 0
            && self.tau_plus < self.tau_neg_min
            && self.tau_neg_min <= self.tau_neg_max)
        {
            return Err(SamplerConfigError::BadTemporalRanges {
                tau_plus: self.tau_plus,
                tau_neg_min: self.tau_neg_min,
                tau_neg_max: self.tau_neg_max,
            });
        }
        for (name, (lo, hi)) in [("sigma_pos", self.sigma_pos), ("sigma_neg", self.sigma_neg)] {
            if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
                return Err(SamplerConfigError::BadIouInterval {
                    name,
                    lo: format!("{lo}"),
                    hi: format!("{hi}"),
                });
            }
        }
        if self.sigma_neg.1 >= self.sigma_pos.0 {
            return Err(SamplerConfigError::NoClassGap {
                neg_hi: format!("{}", self.sigma_neg.1),
                pos_lo: format!("{}", self.sigma_pos.0),
            });
        }
        if self.negatives_per_positive == 0 {
            return Err(SamplerConfigError::NoNegatives);
        }
        if self.max_crop_attempts == 0 {
            return Err(SamplerConfigError::NoAttempts);
        }
        Ok(())
    }
}

/// An anchor/candidate frame pair for the temporal task.
///
/// Samples emitted by [`sample_temporal_tuples`] satisfy the offset-label
/// rule checked by [`label_temporal`]; mined repetition tuples reuse this
/// type with offsets outside those ranges, so the rule is a property of the
/// sampler, not the struct.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemporalTuple {
    pub anchor: FrameId,
    pub candidate: FrameId,
    pub delta_t: i32,
    pub label: bool,
}

/// A frame/crop pair for the spatial task.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialSample {
    pub frame: FrameId,
    pub crop: BoundingBox,
    pub iou_value: f32,
    pub label: bool,
}

/// Classifies a signed temporal offset: `Some(true)` for the exact positive
/// offset, `Some(false)` inside the negative band on either side, `None` in
/// the gap (sample rejected).
pub fn label_temporal(delta_t: i32, cfg: &SamplerConfig) -> Option<bool> {
    if delta_t == cfg.tau_plus as i32 {
        return Some(true);
    }
    let mag = delta_t.unsigned_abs();
    if mag >= cfg.tau_neg_min && mag <= cfg.tau_neg_max {
        return Some(false);
    }
    None
}

/// Classifies a crop overlap: `Some(true)` inside `sigma_pos`, `Some(false)`
/// inside `sigma_neg`, `None` in the gap between classes.
pub fn label_spatial(iou_value: f32, cfg: &SamplerConfig) -> Option<bool> {
    if iou_value >= cfg.sigma_pos.0 && iou_value <= cfg.sigma_pos.1 {
        Some(true)
    } else if iou_value >= cfg.sigma_neg.0 && iou_value <= cfg.sigma_neg.1 {
        Some(false)
    } else {
        None
    }
}

/// Draws temporal tuples from one clip.
///
/// Anchors step through the clip's frame list at `anchor_stride` positions.
/// An anchor is used only when both its positive offset and the farthest
/// negative offset stay inside the clip, which keeps every emitted anchor at
/// exactly one positive plus `negatives_per_positive` negatives. Offsets are
/// measured in list positions (equal to frame indices for contiguous clips).
/// Deterministic per (seed, video id, anchor position); clips shorter than
/// `tau_neg_max + 1` yield an empty list.
pub fn sample_temporal_tuples(
    clip: &VideoClip,
    cfg: &SamplerConfig,
    anchor_stride: u32,
) -> Vec<TemporalTuple> {
    assert!(anchor_stride > 0, "anchor_stride must be positive");
    let frames = clip.frames();
    let n = frames.len();
    let mut tuples = Vec::new();
    if n <= cfg.tau_neg_max as usize {
        return tuples;
    }
    let fid = |pos: usize| FrameId {
        video_id: frames[pos].video_id.clone(),
        frame_index: frames[pos].frame_index,
    };

    let last_valid_anchor = n - 1 - cfg.tau_neg_max as usize;
    let mut anchor = 0usize;
    while anchor <= last_valid_anchor {
        let mut rng = make_rng(
            cfg.seed,
            &format!("sample.temporal.{}.{}", clip.video_id(), anchor),
        );
        // Positive: exactly tau_plus ahead (tau_plus < tau_neg_max keeps it
        // in-clip for every valid anchor).
        let pos_cand = anchor + cfg.tau_plus as usize;
        tuples.push(TemporalTuple {
            anchor: fid(anchor),
            candidate: fid(pos_cand),
            delta_t: cfg.tau_plus as i32,
            label: true,
        });

        // All in-clip negative offsets, ascending, then a uniform draw
        // without replacement.
        let mut offsets: Vec<i32> = Vec::new();
        for mag in cfg.tau_neg_min..=cfg.tau_neg_max {
            let d = mag as i32;
            if anchor as i64 - d as i64 >= 0 {
                offsets.push(-d);
            }
        }
        offsets.sort_unstable();
        for mag in cfg.tau_neg_min..=cfg.tau_neg_max {
            let d = mag as i32;
            if anchor + d as usize <= n - 1 {
                offsets.push(d);
            }
        }
        debug_assert!(offsets.len() >= cfg.negatives_per_positive);
        let picks = sample_without_replacement(&mut rng, offsets.len(), cfg.negatives_per_positive);
        let mut chosen: Vec<i32> = picks.iter().map(|&i| offsets[i]).collect();
        chosen.sort_unstable();
        for d in chosen {
            let cand = (anchor as i64 + d as i64) as usize;
            tuples.push(TemporalTuple {
                anchor: fid(anchor),
                candidate: fid(cand),
                delta_t: d,
                label: false,
            });
        }
        anchor += anchor_stride as usize;
    }
    tuples
}

/// Draws spatial crop samples for one frame: one overlapping positive crop
/// and `negatives_per_positive` off-person negatives, found by rejection
/// sampling around the person box. A class that stays empty after
/// `max_crop_attempts` draws is returned short; callers balance classes
/// across frames.
///
/// Crop centers are uniform inside the person box, the scale is log-uniform
/// in [0.5, 2] times the box size, and the aspect ratio jitters by up to
/// 20%. Crops may extend past the image border (readers zero-fill).
pub fn sample_spatial_crops(frame: &Frame, cfg: &SamplerConfig) -> Vec<SpatialSample> {
    let mut rng = make_rng(
        cfg.seed,
        &format!("sample.spatial.{}.{}", frame.video_id, frame.frame_index),
    );
    let person = frame.person_box;
    let fid = FrameId {
        video_id: frame.video_id.clone(),
        frame_index: frame.frame_index,
    };
    let ln_half = 0.5f32.ln();
    let ln_two = 2.0f32.ln();

    let draw = |rng: &mut rand_chacha::ChaCha12Rng| -> (BoundingBox, f32) {
        let cx = rng.random_range(person.x_min..person.x_max);
        let cy = rng.random_range(person.y_min..person.y_max);
        let scale = rng.random_range(ln_half..ln_two).exp();
        let aspect = rng.random_range(0.8f32..1.2);
        let w = person.width() * scale * aspect;
        let h = person.height() * scale / aspect;
        let crop = BoundingBox::new(cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h);
        let iou = person.iou(&crop);
        (crop, iou)
    };

    let mut samples = Vec::with_capacity(1 + cfg.negatives_per_positive);
    for _ in 0..cfg.max_crop_attempts {
        let (crop, iou) = draw(&mut rng);
        if label_spatial(iou, cfg) == Some(true) {
            samples.push(SpatialSample {
                frame: fid.clone(),
                crop,
                iou_value: iou,
                label: true,
            });
            break;
        }
    }
    let mut negatives = 0usize;
    for _ in 0..cfg.max_crop_attempts {
        if negatives == cfg.negatives_per_positive {
            break;
        }
        let (crop, iou) = draw(&mut rng);
        if label_spatial(iou, cfg) == Some(false) {
            samples.push(SpatialSample {
                frame: fid.clone(),
                crop,
                iou_value: iou,
                label: false,
            });
            negatives += 1;
        }
    }
    samples
}
