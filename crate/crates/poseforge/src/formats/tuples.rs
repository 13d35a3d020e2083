//! Training tuple file: temporal and spatial records interleaved, one per
//! line, distinguished by a leading tag.
//!
//! `T<TAB>video_id<TAB>anchor_idx<TAB>cand_idx<TAB>label`
//! `S<TAB>video_id<TAB>frame_idx<TAB>x_min,y_min,x_max,y_max<TAB>iou<TAB>label`
//!
//! Labels are `1`/`0`. Temporal offsets are not stored; `delta_t` is
//! recomputed as `cand_idx - anchor_idx` on load.

use std::path::Path;

use poseforge_core::data::FrameId;
use poseforge_core::geom::BoundingBox;
use poseforge_core::sampling::{SpatialSample, TemporalTuple};

use super::{parse_csv_floats, parse_field, read_numbered_lines, write_text, FormatError};

fn label_str(label: bool) -> &'static str {
    if label {
        "1"
    } else {
        "0"
    }
}

fn parse_label(path: &Path, line: usize, raw: &str) -> Result<bool, FormatError> {
    match raw {
        "1" => Ok(true),
        "0" => Ok(false),
        other => Err(FormatError::malformed(
            path,
            line,
            format!("label must be 0 or 1, got {other:?}"),
        )),
    }
}

pub fn save_tuples(
    path: &Path,
    temporal: &[TemporalTuple],
    spatial: &[SpatialSample],
) -> Result<(), FormatError> {
    let mut out = String::new();
    for t in temporal {
        out.push_str(&format!(
            "T\t{}\t{}\t{}\t{}\n",
            t.anchor.video_id,
            t.anchor.frame_index,
            t.candidate.frame_index,
            label_str(t.label)
        ));
    }
    for s in spatial {
        let b = &s.crop;
        out.push_str(&format!(
            "S\t{}\t{}\t{},{},{},{}\t{}\t{}\n",
            s.frame.video_id,
            s.frame.frame_index,
            b.x_min,
            b.y_min,
            b.x_max,
            b.y_max,
            s.iou_value,
            label_str(s.label)
        ));
    }
    write_text(path, &out)
}

pub fn load_tuples(
    path: &Path,
) -> Result<(Vec<TemporalTuple>, Vec<SpatialSample>), FormatError> {
    let mut temporal = Vec::new();
    let mut spatial = Vec::new();
    for (lineno, line) in read_numbered_lines(path)? {
        let fields: Vec<&str> = line.split('\t').collect();
        match fields.first().copied() {
            Some("T") => {
                if fields.len() != 5 {
                    return Err(FormatError::malformed(
                        path,
                        lineno,
                        format!("T record needs 5 fields, got {}", fields.len()),
                    ));
                }
                let video_id = fields[1].to_string();
                let anchor_idx: u32 = parse_field(path, lineno, "anchor_idx", fields[2])?;
                let cand_idx: u32 = parse_field(path, lineno, "cand_idx", fields[3])?;
                temporal.push(TemporalTuple {
                    anchor: FrameId {
                        video_id: video_id.clone(),
                        frame_index: anchor_idx,
                    },
                    candidate: FrameId {
                        video_id,
                        frame_index: cand_idx,
                    },
                    delta_t: cand_idx as i32 - anchor_idx as i32,
                    label: parse_label(path, lineno, fields[4])?,
                });
            }
            Some("S") => {
                if fields.len() != 6 {
                    return Err(FormatError::malformed(
                        path,
                        lineno,
                        format!("S record needs 6 fields, got {}", fields.len()),
                    ));
                }
                let coords = parse_csv_floats(path, lineno, "crop", fields[3], 4)?;
                spatial.push(SpatialSample {
                    frame: FrameId {
                        video_id: fields[1].to_string(),
                        frame_index: parse_field(path, lineno, "frame_idx", fields[2])?,
                    },
                    crop: BoundingBox::new(coords[0], coords[1], coords[2], coords[3]),
                    iou_value: parse_field(path, lineno, "iou", fields[4])?,
                    label: parse_label(path, lineno, fields[5])?,
                });
            }
            Some(tag) => {
                return Err(FormatError::malformed(
                    path,
                    lineno,
                    format!("unknown record tag {tag:?}"),
                ));
            }
            None => unreachable!("blank lines are filtered"),
        }
    }
    Ok((temporal, spatial))
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn sample_records() -> (Vec<TemporalTuple>, Vec<SpatialSample>) {
        let id = |v: &str, i: u32| FrameId {
            video_id: v.to_string(),
            frame_index: i,
        };
        let temporal = vec![
            TemporalTuple {
                anchor: id("v0", 10),
                candidate: id("v0", 14),
                delta_t: 4,
                label: true,
            },
            TemporalTuple {
                anchor: id("v0", 10),
                candidate: id("v0", 2),
                delta_t: -8,
                label: false,
            },
        ];
        let spatial = vec![SpatialSample {
            frame: id("v1", 7),
            crop: BoundingBox::new(3.5, 4.25, 31.0, 42.0),
            iou_value: 0.8125,
            label: true,
        }];
        (temporal, spatial)
    }

    #[test]
    fn round_trips_both_record_kinds() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("tuples.tsv");
        let (t, s) = sample_records();
        save_tuples(&path, &t, &s).unwrap();
        let (t2, s2) = load_tuples(&path).unwrap();
        assert_eq!(t, t2);
        assert_eq!(s, s2);
    }

    #[test]
    fn delta_t_is_recomputed_from_indices() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("tuples.tsv");
        let (t, _) = sample_records();
        save_tuples(&path, &t, &[]).unwrap();
        let (t2, _) = load_tuples(&path).unwrap();
        assert_eq!(t2[0].delta_t, 4);
        assert_eq!(t2[1].delta_t, -8);
    }

    #[test]
    fn unknown_tag_rejected_with_line() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("tuples.tsv");
        std::fs::write(&path, "T\tv\t0\t4\t1\nX\tv\t0\t4\t1\n").unwrap();
        let err = load_tuples(&path).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains(":2:"), "{msg}");
        assert!(msg.contains("\"X\""), "{msg}");
    }

    #[test]
    fn bad_label_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("tuples.tsv");
        std::fs::write(&path, "T\tv\t0\t4\t2\n").unwrap();
        let err = load_tuples(&path).unwrap_err();
        assert!(err.to_string().contains("label"), "{err}");
    }

    #[test]
    fn empty_file_loads_empty() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("tuples.tsv");
        std::fs::write(&path, "").unwrap();
        let (t, s) = load_tuples(&path).unwrap();
        assert!(t.is_empty());
        assert!(s.is_empty());
    }
}
