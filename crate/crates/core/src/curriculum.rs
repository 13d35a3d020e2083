//! Difficulty-ordered training schedule.
//!
//! Frames are sorted by descending motion score and split into consecutive
//! blocks; training starts with the easiest block and releases one more
//! block every `update_interval` iterations. Blocks are stored as one flat
//! sorted list plus end offsets, so an active pool is just a prefix slice.

use alloc::string::String;
use alloc::vec::Vec;

use crate::data::FrameId;
use crate::flow::MotionScore;

/// Default block percentages: roughly exponential growth from 5% capped at
/// 25%, seven steps, summing to 100.
pub const DEFAULT_FRACTIONS: [u32; 7] = [5, 7, 10, 14, 19, 20, 25];

/// Default block release interval in iterations at full scale.
pub const PAPER_UPDATE_INTERVAL: u32 = 2500;
/// Default release interval at desk scale (total iterations scaled down
/// by the same factor).
pub const DESK_UPDATE_INTERVAL: u32 = 250;

/// One scheduled sample: a frame id with the motion score that ranked it.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleEntry {
    pub id: FrameId,
    pub ratio: f64,
}

/// Samples in difficulty order, split into release blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct CurriculumSchedule {
    entries: Vec<ScheduleEntry>,
    /// `block_ends[b]` = index one past block `b` in `entries`.
    block_ends: Vec<usize>,
    update_interval: u32,
    fractions: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CurriculumError {
    #[error("fractions must be non-empty, positive, at most 25 each, and sum to 100 (got sum {sum})")]
    BadFractions { sum: u32 },
    #[error("{n_samples} samples cannot fill {n_blocks} curriculum blocks")]
    TooFewSamples { n_samples: usize, n_blocks: usize },
    #[error("update_interval must be positive")]
    ZeroInterval,
    #[error("duplicate sample id {video_id}:{frame_index}")]
    DuplicateSample { video_id: String, frame_index: u32 },
    #[error("non-finite or negative motion score for {video_id}:{frame_index}")]
    BadScore { video_id: String, frame_index: u32 },
    #[error("curriculum block {block} has no samples")]
    EmptyBlock { block: usize },
}

fn validate_fractions(fractions: &[u32]) -> Result<(), CurriculumError> {
    let sum: u32 = fractions.iter().sum();
    if fractions.is_empty() || fractions.iter().any(|&f| f == 0 || f > 25) || sum != 100 {
        return Err(CurriculumError::BadFractions { sum });
    }
    Ok(())
}

/// Sorts scores into blocks.
///
/// Ordering is descending by ratio with ties broken by (video_id,
/// frame_index) ascending. Block `b` holds `floor(fractions[b] * N / 100)`
/// samples; the rounding remainder goes to the last block.
pub fn build_curriculum(
    scores: &[MotionScore],
    fractions: &[u32],
    update_interval: u32,
) -> Result<CurriculumSchedule, CurriculumError> {
    validate_fractions(fractions)?;
    if update_interval == 0 {
        return Err(CurriculumError::ZeroInterval);
    }
    if scores.len() < fractions.len() {
        return Err(CurriculumError::TooFewSamples {
            n_samples: scores.len(),
            n_blocks: fractions.len(),
        });
    }
    for s in scores {
        if !s.fg_bg_ratio.is_finite() || s.fg_bg_ratio < 0.0 {
            return Err(CurriculumError::BadScore {
                video_id: s.video_id.clone(),
                frame_index: s.frame_index,
            });
        }
    }

    let mut entries: Vec<ScheduleEntry> = scores
        .iter()
        .map(|s| ScheduleEntry {
            id: FrameId {
                video_id: s.video_id.clone(),
                frame_index: s.frame_index,
            },
            ratio: s.fg_bg_ratio,
        })
        .collect();

    let mut ids: Vec<&FrameId> = entries.iter().map(|e| &e.id).collect();
    ids.sort();
    for pair in ids.windows(2) {
        if pair[0] == pair[1] {
            return Err(CurriculumError::DuplicateSample {
                video_id: pair[0].video_id.clone(),
                frame_index: pair[0].frame_index,
            });
        }
    }

    entries.sort_by(|a, b| {
        b.ratio
            .partial_cmp(&a.ratio)
            .expect("scores checked finite")
            .then_with(|| a.id.cmp(&b.id))
    });

    let n = entries.len();
    let mut block_ends = Vec::with_capacity(fractions.len());
    let mut end = 0usize;
    for &f in fractions {
        end += (f as usize * n) / 100;
        block_ends.push(end);
    }
    // Flooring leaves a remainder; the last block absorbs it.
    *block_ends.last_mut().expect("fractions non-empty") = n;

    Ok(CurriculumSchedule {
        entries,
        block_ends,
        update_interval,
        fractions: fractions.to_vec(),
    })
}

impl CurriculumSchedule {
    pub fn n_blocks(&self) -> usize {
        self.block_ends.len()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn update_interval(&self) -> u32 {
        self.update_interval
    }

    pub fn fractions(&self) -> &[u32] {
        &self.fractions
    }

    /// All entries in difficulty order (concatenated blocks).
    pub fn entries(&self) -> &[ScheduleEntry] {
        &self.entries
    }

    /// Entries of block `b`.
    pub fn block(&self, b: usize) -> &[ScheduleEntry] {
        let start = if b == 0 { 0 } else { self.block_ends[b - 1] };
        &self.entries[start..self.block_ends[b]]
    }

    /// Index of the highest block released at `iteration`.
    pub fn released_blocks(&self, iteration: u32) -> usize {
        ((iteration / self.update_interval) as usize).min(self.n_blocks() - 1)
    }

    /// Samples available at `iteration`: the union of blocks
    /// `0..=released_blocks(iteration)`, which is a prefix of the
    /// difficulty-ordered list. Monotone non-decreasing in `iteration`.
    pub fn active_pool(&self, iteration: u32) -> &[ScheduleEntry] {
        &self.entries[..self.block_ends[self.released_blocks(iteration)]]
    }

    /// Block index of a sample id, if scheduled.
    pub fn block_of(&self, id: &FrameId) -> Option<usize> {
        let pos = self.entries.iter().position(|e| &e.id == id)?;
        Some(self.block_ends.partition_point(|&end| end <= pos))
    }

    /// Rebuilds a schedule from explicit block contents, preserving the
    /// given order exactly (no re-sorting). This is the inverse of writing
    /// the schedule out block by block, and also admits deliberately
    /// reordered blocks for ablations. Block percentages are derived from
    /// the block sizes, so they are approximate for hand-built schedules.
    pub fn from_parts(
        blocks: Vec<Vec<ScheduleEntry>>,
        update_interval: u32,
    ) -> Result<Self, CurriculumError> {
        if update_interval == 0 {
            return Err(CurriculumError::ZeroInterval);
        }
        if blocks.is_empty() {
            return Err(CurriculumError::TooFewSamples {
                n_samples: 0,
                n_blocks: 0,
            });
        }
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(CurriculumError::EmptyBlock { block: b });
            }
        }

        let mut entries = Vec::new();
        let mut block_ends = Vec::with_capacity(blocks.len());
        for block in blocks {
            entries.extend(block);
            block_ends.push(entries.len());
        }

        for e in &entries {
            if !e.ratio.is_finite() || e.ratio < 0.0 {
                return Err(CurriculumError::BadScore {
                    video_id: e.id.video_id.clone(),
                    frame_index: e.id.frame_index,
                });
            }
        }
        let mut ids: Vec<&FrameId> = entries.iter().map(|e| &e.id).collect();
        ids.sort();
        for pair in ids.windows(2) {
            if pair[0] == pair[1] {
                return Err(CurriculumError::DuplicateSample {
                    video_id: pair[0].video_id.clone(),
                    frame_index: pair[0].frame_index,
                });
            }
        }

        let n = entries.len();
        let mut fractions: Vec<u32> = block_ends
            .windows(2)
            .map(|w| ((w[1] - w[0]) * 100 / n) as u32)
            .collect();
        let first = block_ends[0] * 100 / n;
        fractions.insert(0, first as u32);
        let sum: u32 = fractions.iter().sum();
        *fractions.last_mut().expect("blocks non-empty") += 100 - sum.min(100);

        Ok(CurriculumSchedule {
            entries,
            block_ends,
            update_interval,
            fractions,
        })
    }
}
