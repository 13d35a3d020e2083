//! Frame manifest plus the frame images it points at.
//!
//! The manifest is `manifest.tsv` in the dataset root, one frame per line:
//! `video_id<TAB>frame_index<TAB>relative_path<TAB>x_min,y_min,x_max,y_max`.
//! Paths are relative to the manifest's directory; frames are binary PGM.

use std::collections::BTreeMap;
use std::path::Path;

use poseforge_core::data::{Dataset, Frame, VideoClip};
use poseforge_core::geom::BoundingBox;

use super::pgm::{load_pgm, save_pgm};
use super::{parse_csv_floats, parse_field, read_numbered_lines, split_fields, write_text, FormatError};

pub const MANIFEST_NAME: &str = "manifest.tsv";

fn frame_rel_path(video_id: &str, frame_index: u32) -> String {
    format!("frames/{video_id}/{frame_index:05}.pgm")
}

/// Writes every frame image under `dir/frames/` and the manifest that
/// binds them. Overwrites existing files.
pub fn save_dataset(dir: &Path, dataset: &Dataset) -> Result<(), FormatError> {
    let manifest_path = dir.join(MANIFEST_NAME);
    let mut manifest = String::new();
    for clip in dataset.clips() {
        for frame in clip.frames() {
            let rel = frame_rel_path(&frame.video_id, frame.frame_index);
            save_pgm(&dir.join(&rel), &frame.image)?;
            let b = &frame.person_box;
            manifest.push_str(&format!(
                "{}\t{}\t{}\t{},{},{},{}\n",
                frame.video_id, frame.frame_index, rel, b.x_min, b.y_min, b.x_max, b.y_max
            ));
        }
    }
    write_text(&manifest_path, &manifest)
}

/// Loads the manifest at `dir/manifest.tsv` and every frame it references.
/// Clips come back sorted by video id; frame order within a clip must
/// already be strictly ascending.
pub fn load_dataset(dir: &Path) -> Result<Dataset, FormatError> {
    let manifest_path = dir.join(MANIFEST_NAME);
    let mut clips: BTreeMap<String, Vec<Frame>> = BTreeMap::new();
    for (lineno, line) in read_numbered_lines(&manifest_path)? {
        let f = split_fields(&manifest_path, lineno, &line, 4)?;
        let video_id = f[0].to_string();
        let frame_index: u32 = parse_field(&manifest_path, lineno, "frame_index", f[1])?;
        let coords = parse_csv_floats(&manifest_path, lineno, "person box", f[3], 4)?;
        let image_path = dir.join(f[2]);
        let image = load_pgm(&image_path)?;
        clips.entry(video_id.clone()).or_default().push(Frame {
            video_id,
            frame_index,
            image,
            person_box: BoundingBox::new(coords[0], coords[1], coords[2], coords[3]),
        });
    }
    let clips: Result<Vec<VideoClip>, _> = clips
        .into_iter()
        .map(|(id, frames)| VideoClip::new(id, frames))
        .collect();
    let clips = clips.map_err(|e| FormatError::Data {
        path: manifest_path.clone(),
        source: e,
    })?;
    Dataset::new(clips).map_err(|e| FormatError::Data {
        path: manifest_path,
        source: e,
    })
}
