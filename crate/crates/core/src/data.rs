//! In-memory dataset model: frames, clips, pose annotations, and benchmark
//! exemplars. File formats live in the companion crate; these types only
//! enforce the structural invariants everything downstream relies on.

use alloc::string::String;
use alloc::vec::Vec;

use crate::geom::BoundingBox;
use crate::image::GrayImage;

/// Number of annotated body joints.
pub const JOINT_COUNT: usize = 14;

/// Fixed joint order used by every pose-valued API.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[repr(usize)]
pub enum Joint {
    Head = 0,
    Neck,
    LeftShoulder,
    RightShoulder,
    LeftElbow,
    RightElbow,
    LeftWrist,
    RightWrist,
    LeftHip,
    RightHip,
    LeftKnee,
    RightKnee,
    LeftAnkle,
    RightAnkle,
}

impl Joint {
    pub const ALL: [Joint; JOINT_COUNT] = [
        Joint::Head,
        Joint::Neck,
        Joint::LeftShoulder,
        Joint::RightShoulder,
        Joint::LeftElbow,
        Joint::RightElbow,
        Joint::LeftWrist,
        Joint::RightWrist,
        Joint::LeftHip,
        Joint::RightHip,
        Joint::LeftKnee,
        Joint::RightKnee,
        Joint::LeftAnkle,
        Joint::RightAnkle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Joint::Head => "head",
            Joint::Neck => "neck",
            Joint::LeftShoulder => "l_shoulder",
            Joint::RightShoulder => "r_shoulder",
            Joint::LeftElbow => "l_elbow",
            Joint::RightElbow => "r_elbow",
            Joint::LeftWrist => "l_wrist",
            Joint::RightWrist => "r_wrist",
            Joint::LeftHip => "l_hip",
            Joint::RightHip => "r_hip",
            Joint::LeftKnee => "l_knee",
            Joint::RightKnee => "r_knee",
            Joint::LeftAnkle => "l_ankle",
            Joint::RightAnkle => "r_ankle",
        }
    }
}

/// 2D joint positions in pixel coordinates plus per-joint visibility.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseAnnotation {
    pub joints: [(f32, f32); JOINT_COUNT],
    pub visibility: [bool; JOINT_COUNT],
}

impl PoseAnnotation {
    pub fn joint(&self, j: Joint) -> (f32, f32) {
        self.joints[j as usize]
    }
}

/// One video frame with its person box.
#[derive(Debug, Clone)]
pub struct Frame {
    pub video_id: String,
    pub frame_index: u32,
    pub image: GrayImage,
    pub person_box: BoundingBox,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DataError {
    #[error("clip {video_id}: frame indices must be strictly ascending (frame {frame_index} out of order or duplicated)")]
    UnorderedFrames { video_id: String, frame_index: u32 },
    #[error("clip {video_id}: frame {frame_index} carries video_id {found}")]
    ForeignFrame {
        video_id: String,
        frame_index: u32,
        found: String,
    },
    #[error("clip {video_id} is empty")]
    EmptyClip { video_id: String },
    #[error("dataset: clip ids must be strictly ascending ({video_id} out of order or duplicated)")]
    UnorderedClips { video_id: String },
    #[error("{video_id}/{frame_index}: person box does not intersect the image")]
    CropOutsideImage { video_id: String, frame_index: u32 },
    #[error("exemplar needs exactly {expected} positives and {expected} negatives, got {positives}/{negatives}")]
    ExemplarSize {
        expected: usize,
        positives: usize,
        negatives: usize,
    },
    #[error("exemplar query {video_id}/{frame_index} also appears as a positive or negative")]
    ExemplarQueryOverlap { video_id: String, frame_index: u32 },
}

impl Frame {
    /// Cuts `region` out of the frame image and resizes it to a square.
    ///
    /// The region may extend past the border (zero-filled) but must overlap
    /// the image somewhere.
    pub fn crop_resize(
        &self,
        region: &BoundingBox,
        out_size: u32,
    ) -> Result<GrayImage, DataError> {
        let full = BoundingBox::new(0.0, 0.0, self.image.width() as f32, self.image.height() as f32);
        if region.intersection_area(&full) <= 0.0 {
            return Err(DataError::CropOutsideImage {
                video_id: self.video_id.clone(),
                frame_index: self.frame_index,
            });
        }
        Ok(self.image.crop_resize(region, out_size, out_size))
    }
}

/// Frames of one video, strictly ascending by frame index.
#[derive(Debug, Clone)]
pub struct VideoClip {
    video_id: String,
    frames: Vec<Frame>,
}

impl VideoClip {
    pub fn new(video_id: String, frames: Vec<Frame>) -> Result<Self, DataError> {
        if frames.is_empty() {
            return Err(DataError::EmptyClip { video_id });
        }
        for pair in frames.windows(2) {
            if pair[1].frame_index <= pair[0].frame_index {
                return Err(DataError::UnorderedFrames {
                    video_id,
                    frame_index: pair[1].frame_index,
                });
            }
        }
        if let Some(f) = frames.iter().find(|f| f.video_id != video_id) {
            return Err(DataError::ForeignFrame {
                video_id: video_id.clone(),
                frame_index: f.frame_index,
                found: f.video_id.clone(),
            });
        }
        Ok(Self { video_id, frames })
    }

    pub fn video_id(&self) -> &str {
        &self.video_id
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Position of `frame_index` in the frame list, if present.
    pub fn position_of(&self, frame_index: u32) -> Option<usize> {
        self.frames
            .binary_search_by_key(&frame_index, |f| f.frame_index)
            .ok()
    }
}

/// A loaded dataset: clips strictly ascending by video id.
#[derive(Debug, Clone)]
pub struct Dataset {
    clips: Vec<VideoClip>,
}

impl Dataset {
    pub fn new(clips: Vec<VideoClip>) -> Result<Self, DataError> {
        for pair in clips.windows(2) {
            if pair[1].video_id() <= pair[0].video_id() {
                return Err(DataError::UnorderedClips {
                    video_id: pair[1].video_id().into(),
                });
            }
        }
        Ok(Self { clips })
    }

    pub fn clips(&self) -> &[VideoClip] {
        &self.clips
    }

    pub fn clip(&self, video_id: &str) -> Option<&VideoClip> {
        self.clips
            .binary_search_by(|c| c.video_id().cmp(video_id))
            .ok()
            .map(|i| &self.clips[i])
    }

    pub fn frame(&self, id: &FrameId) -> Option<&Frame> {
        let clip = self.clip(&id.video_id)?;
        clip.position_of(id.frame_index).map(|p| &clip.frames()[p])
    }

    pub fn total_frames(&self) -> usize {
        self.clips.iter().map(VideoClip::len).sum()
    }
}

/// Reference to one frame of one video.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FrameId {
    pub video_id: String,
    pub frame_index: u32,
}

impl core::fmt::Display for FrameId {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}:{}", self.video_id, self.frame_index)
    }
}

/// Number of positives (and negatives) per benchmark exemplar.
pub const EXEMPLAR_SET_SIZE: usize = 10;

/// Posture-comparison query: one frame plus ten similar and ten dissimilar
/// frames.
#[derive(Debug, Clone)]
pub struct BenchmarkExemplar {
    pub query: FrameId,
    pub positives: Vec<FrameId>,
    pub negatives: Vec<FrameId>,
}

impl BenchmarkExemplar {
    pub fn new(
        query: FrameId,
        positives: Vec<FrameId>,
        negatives: Vec<FrameId>,
    ) -> Result<Self, DataError> {
        if positives.len() != EXEMPLAR_SET_SIZE || negatives.len() != EXEMPLAR_SET_SIZE {
            return Err(DataError::ExemplarSize {
                expected: EXEMPLAR_SET_SIZE,
                positives: positives.len(),
                negatives: negatives.len(),
            });
        }
        if positives.contains(&query) || negatives.contains(&query) {
            return Err(DataError::ExemplarQueryOverlap {
                video_id: query.video_id,
                frame_index: query.frame_index,
            });
        }
        Ok(Self {
            query,
            positives,
            negatives,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn frame(video: &str, idx: u32) -> Frame {
        Frame {
            video_id: video.to_string(),
            frame_index: idx,
            image: GrayImage::new(8, 8),
            person_box: BoundingBox::new(1.0, 1.0, 7.0, 7.0),
        }
    }

    fn fid(video: &str, idx: u32) -> FrameId {
        FrameId {
            video_id: video.to_string(),
            frame_index: idx,
        }
    }

    #[test]
    fn clip_rejects_unordered_and_duplicate_frames() {
        let err = VideoClip::new("v0".into(), vec![frame("v0", 3), frame("v0", 1)]).unwrap_err();
        assert!(matches!(err, DataError::UnorderedFrames { frame_index: 1, .. }));
        let err = VideoClip::new("v0".into(), vec![frame("v0", 2), frame("v0", 2)]).unwrap_err();
        assert!(matches!(err, DataError::UnorderedFrames { .. }));
        assert!(VideoClip::new("v0".into(), vec![]).is_err());
    }

    #[test]
    fn clip_rejects_foreign_frames() {
        let err = VideoClip::new("v0".into(), vec![frame("v1", 0)]).unwrap_err();
        assert!(matches!(err, DataError::ForeignFrame { .. }));
    }

    #[test]
    fn dataset_lookup() {
        let c0 = VideoClip::new("a".into(), vec![frame("a", 0), frame("a", 5)]).unwrap();
        let c1 = VideoClip::new("b".into(), vec![frame("b", 2)]).unwrap();
        let ds = Dataset::new(vec![c0, c1]).unwrap();
        assert_eq!(ds.total_frames(), 3);
        assert!(ds.clip("a").is_some());
        assert!(ds.clip("c").is_none());
        assert_eq!(ds.frame(&fid("a", 5)).unwrap().frame_index, 5);
        assert!(ds.frame(&fid("a", 3)).is_none());
        assert_eq!(ds.clip("a").unwrap().position_of(5), Some(1));
    }

    #[test]
    fn dataset_rejects_unsorted_clips() {
        let c0 = VideoClip::new("b".into(), vec![frame("b", 0)]).unwrap();
        let c1 = VideoClip::new("a".into(), vec![frame("a", 0)]).unwrap();
        assert!(matches!(
            Dataset::new(vec![c0, c1]).unwrap_err(),
            DataError::UnorderedClips { .. }
        ));
    }

    #[test]
    fn frame_crop_requires_overlap() {
        let f = frame("v0", 0);
        let outside = BoundingBox::new(20.0, 20.0, 30.0, 30.0);
        assert!(matches!(
            f.crop_resize(&outside, 4).unwrap_err(),
            DataError::CropOutsideImage { .. }
        ));
        let straddling = BoundingBox::new(-4.0, 0.0, 4.0, 8.0);
        assert!(f.crop_resize(&straddling, 4).is_ok());
    }

    #[test]
    fn exemplar_shape_checks() {
        let pos: Vec<FrameId> = (0..10).map(|i| fid("v", 10 + i)).collect();
        let neg: Vec<FrameId> = (0..10).map(|i| fid("v", 50 + i)).collect();
        assert!(BenchmarkExemplar::new(fid("v", 0), pos.clone(), neg.clone()).is_ok());
        assert!(matches!(
            BenchmarkExemplar::new(fid("v", 0), pos[..9].to_vec(), neg.clone()).unwrap_err(),
            DataError::ExemplarSize { positives: 9, .. }
        ));
        assert!(matches!(
            BenchmarkExemplar::new(fid("v", 12), pos, neg).unwrap_err(),
            DataError::ExemplarQueryOverlap { .. }
        ));
    }

    #[test]
    fn joint_order_is_fixed() {
        assert_eq!(Joint::ALL.len(), JOINT_COUNT);
        assert_eq!(Joint::Head as usize, 0);
        assert_eq!(Joint::RightAnkle as usize, 13);
        assert_eq!(Joint::ALL[2].name(), "l_shoulder");
        assert_eq!(Joint::ALL[9].name(), "r_hip");
    }
}
