//! Motion score file: `video_id<TAB>frame_index<TAB>ratio`, one frame per
//! line, in dataset order.

use std::path::Path;

use poseforge_core::flow::MotionScore;

use super::{parse_field, read_numbered_lines, split_fields, write_text, FormatError};

pub fn save_scores(path: &Path, scores: &[MotionScore]) -> Result<(), FormatError> {
    let mut out = String::new();
    for s in scores {
        out.push_str(&format!("{}\t{}\t{}\n", s.video_id, s.frame_index, s.fg_bg_ratio));
    }
    write_text(path, &out)
}

pub fn load_scores(path: &Path) -> Result<Vec<MotionScore>, FormatError> {
    let mut scores = Vec::new();
    for (lineno, line) in read_numbered_lines(path)? {
        let f = split_fields(path, lineno, &line, 3)?;
        scores.push(MotionScore {
            video_id: f[0].to_string(),
            frame_index: parse_field(path, lineno, "frame_index", f[1])?,
            fg_bg_ratio: parse_field(path, lineno, "ratio", f[2])?,
        });
    }
    Ok(scores)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn round_trips_bit_exactly() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("scores.tsv");
        let scores = vec![
            MotionScore {
                video_id: "a".to_string(),
                frame_index: 0,
                fg_bg_ratio: 1.0 / 3.0,
            },
            MotionScore {
                video_id: "a".to_string(),
                frame_index: 1,
                fg_bg_ratio: 7.25e-3,
            },
        ];
        save_scores(&path, &scores).unwrap();
        let back = load_scores(&path).unwrap();
        assert_eq!(scores.len(), back.len());
        for (s, b) in scores.iter().zip(&back) {
            assert_eq!(s.video_id, b.video_id);
            assert_eq!(s.frame_index, b.frame_index);
            assert_eq!(s.fg_bg_ratio.to_bits(), b.fg_bg_ratio.to_bits());
        }
    }

    #[test]
    fn wrong_field_count_names_line() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("scores.tsv");
        std::fs::write(&path, "a\t0\t0.5\nb\t1\n").unwrap();
        let err = load_scores(&path).unwrap_err();
        assert!(err.to_string().contains(":2:"), "{err}");
    }
}
