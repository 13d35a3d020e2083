//! Ground-truth sidecar: per frame, the cycle phase and 14 joint
//! positions. One line per frame:
//! `video_id<TAB>frame_index<TAB>phase<TAB>x0,y0<TAB>...<TAB>x13,y13`
//! (17 fields). The cycle period is not stored explicitly; it is
//! recovered on load as the first frame index whose phase returns to
//! exactly zero, which holds for every generated clip because phases are
//! computed as `(t mod period) / period`.

use std::collections::BTreeMap;
use std::path::Path;

use poseforge_core::data::{Dataset, PoseAnnotation, JOINT_COUNT};
use poseforge_core::synth::SynthGroundTruth;

use super::{parse_csv_floats, parse_field, read_numbered_lines, split_fields, write_text, FormatError};

pub fn save_ground_truth(path: &Path, gts: &[SynthGroundTruth]) -> Result<(), FormatError> {
    let mut out = String::new();
    for gt in gts {
        for (t, (pose, phase)) in gt.poses.iter().zip(&gt.phases).enumerate() {
            out.push_str(&format!("{}\t{}\t{}", gt.video_id, t, phase));
            for (x, y) in pose.joints {
                out.push_str(&format!("\t{x},{y}"));
            }
            out.push('\n');
        }
    }
    write_text(path, &out)
}

/// Loads the sidecar and rebinds it to `dataset`: person boxes come from
/// the matching frames, and each clip's annotation count must equal its
/// frame count. Returns one ground truth per annotated clip, sorted by
/// video id.
pub fn load_ground_truth(
    path: &Path,
    dataset: &Dataset,
) -> Result<Vec<SynthGroundTruth>, FormatError> {
    struct Row {
        frame_index: u32,
        phase: f32,
        pose: PoseAnnotation,
    }
    let mut by_video: BTreeMap<String, Vec<Row>> = BTreeMap::new();
    for (lineno, line) in read_numbered_lines(path)? {
        let f = split_fields(path, lineno, &line, 3 + JOINT_COUNT)?;
        let video_id = f[0].to_string();
        let frame_index: u32 = parse_field(path, lineno, "frame_index", f[1])?;
        let phase: f32 = parse_field(path, lineno, "phase", f[2])?;
        if !(0.0..1.0).contains(&phase) {
            return Err(FormatError::malformed(
                path,
                lineno,
                format!("phase {phase} outside [0, 1)"),
            ));
        }
        let mut joints = [(0.0f32, 0.0f32); JOINT_COUNT];
        for (j, slot) in joints.iter_mut().enumerate() {
            let pair = parse_csv_floats(path, lineno, "joint", f[3 + j], 2)?;
            *slot = (pair[0], pair[1]);
        }
        by_video.entry(video_id).or_default().push(Row {
            frame_index,
            phase,
            pose: PoseAnnotation {
                joints,
                visibility: [true; JOINT_COUNT],
            },
        });
    }

    let mut gts = Vec::new();
    for (video_id, rows) in by_video {
        let clip = dataset
            .clips()
            .iter()
            .find(|c| c.video_id() == video_id)
            .ok_or_else(|| {
                FormatError::corrupt(path, format!("annotations for unknown clip {video_id}"))
            })?;
        if rows.len() != clip.frames().len() {
            return Err(FormatError::corrupt(
                path,
                format!(
                    "clip {video_id}: {} annotations for {} frames",
                    rows.len(),
                    clip.frames().len()
                ),
            ));
        }
        for (row, frame) in rows.iter().zip(clip.frames()) {
            if row.frame_index != frame.frame_index {
                return Err(FormatError::corrupt(
                    path,
                    format!(
                        "clip {video_id}: annotation for frame {} where dataset has {}",
                        row.frame_index, frame.frame_index
                    ),
                ));
            }
        }
        let period = rows
            .iter()
            .skip(1)
            .position(|r| r.phase == 0.0)
            .map(|p| (p + 1) as u32)
            .ok_or_else(|| {
                FormatError::corrupt(
                    path,
                    format!("clip {video_id}: phase never returns to zero, cannot recover period"),
                )
            })?;
        gts.push(SynthGroundTruth {
            video_id,
            boxes: clip.frames().iter().map(|f| f.person_box).collect(),
            phases: rows.iter().map(|r| r.phase).collect(),
            poses: rows.into_iter().map(|r| r.pose).collect(),
            period,
        });
    }
    Ok(gts)
}
