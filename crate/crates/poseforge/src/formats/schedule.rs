//! Curriculum schedule file: `block<TAB>sample_id<TAB>ratio` per line,
//! where `sample_id` is `video_id:frame_index`. Line order within a block
//! is preserved verbatim on load, so a schedule round-trips exactly and a
//! deliberately shuffled file trains in the shuffled order. The release
//! interval is not part of the file; the loader takes it as an argument.

use std::path::Path;

use poseforge_core::curriculum::{CurriculumSchedule, ScheduleEntry};
use poseforge_core::data::FrameId;

use super::{parse_field, read_numbered_lines, split_fields, write_text, FormatError};

pub fn save_schedule(path: &Path, schedule: &CurriculumSchedule) -> Result<(), FormatError> {
    let mut out = String::new();
    for b in 0..schedule.n_blocks() {
        for e in schedule.block(b) {
            out.push_str(&format!(
                "{}\t{}:{}\t{}\n",
                b, e.id.video_id, e.id.frame_index, e.ratio
            ));
        }
    }
    write_text(path, &out)
}

pub fn load_schedule(
    path: &Path,
    update_interval: u32,
) -> Result<CurriculumSchedule, FormatError> {
    let mut blocks: Vec<Vec<ScheduleEntry>> = Vec::new();
    for (lineno, line) in read_numbered_lines(path)? {
        let f = split_fields(path, lineno, &line, 3)?;
        let block: usize = parse_field(path, lineno, "block", f[0])?;
        let (video_id, frame_raw) = f[1].rsplit_once(':').ok_or_else(|| {
            FormatError::malformed(
                path,
                lineno,
                format!("sample_id {:?} is not video_id:frame_index", f[1]),
            )
        })?;
        if block >= blocks.len() {
            blocks.resize_with(block + 1, Vec::new);
        }
        blocks[block].push(ScheduleEntry {
            id: FrameId {
                video_id: video_id.to_string(),
                frame_index: parse_field(path, lineno, "frame_index", frame_raw)?,
            },
            ratio: parse_field(path, lineno, "ratio", f[2])?,
        });
    }
    CurriculumSchedule::from_parts(blocks, update_interval).map_err(|e| FormatError::Schedule {
        path: path.to_path_buf(),
        source: e,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use poseforge_core::curriculum::build_curriculum;
    use poseforge_core::flow::MotionScore;
    use tempfile::tempdir;

    fn scores(n: usize) -> Vec<MotionScore> {
        (0..n)
            .map(|i| MotionScore {
                video_id: format!("v{}", i / 50),
                frame_index: (i % 50) as u32,
                fg_bg_ratio: ((i * 37) % 101) as f64 / 10.0,
            })
            .collect()
    }

    #[test]
    fn round_trips_entries_blocks_and_ratios() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("schedule.tsv");
        let c = build_curriculum(&scores(200), &[10, 20, 25, 25, 20], 50).unwrap();
        save_schedule(&path, &c).unwrap();
        let back = load_schedule(&path, 50).unwrap();
        assert_eq!(back.entries(), c.entries());
        assert_eq!(back.n_blocks(), c.n_blocks());
        for b in 0..c.n_blocks() {
            assert_eq!(back.block(b), c.block(b));
        }
        for it in [0, 49, 50, 149, 10_000] {
            assert_eq!(back.active_pool(it), c.active_pool(it));
        }
    }

    #[test]
    fn preserves_file_order_within_blocks() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("schedule.tsv");
        std::fs::write(&path, "0\tv:3\t1.5\n0\tv:1\t9.0\n1\tv:2\t0.25\n").unwrap();
        let c = load_schedule(&path, 10).unwrap();
        let idx: Vec<u32> = c.entries().iter().map(|e| e.id.frame_index).collect();
        assert_eq!(idx, vec![3, 1, 2]);
        assert_eq!(c.block(0).len(), 2);
        assert_eq!(c.block(1).len(), 1);
    }

    #[test]
    fn gap_in_block_numbering_is_empty_block() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("schedule.tsv");
        std::fs::write(&path, "0\tv:0\t1\n2\tv:1\t1\n").unwrap();
        let err = load_schedule(&path, 10).unwrap_err();
        assert!(err.to_string().contains("block 1"), "{err}");
    }

    #[test]
    fn video_ids_containing_colons_still_parse() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("schedule.tsv");
        std::fs::write(&path, "0\tcam:3:17\t1\n").unwrap();
        let c = load_schedule(&path, 10).unwrap();
        assert_eq!(c.entries()[0].id.video_id, "cam:3");
        assert_eq!(c.entries()[0].id.frame_index, 17);
    }

    #[test]
    fn malformed_sample_id_names_line() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("schedule.tsv");
        std::fs::write(&path, "0\tnocolon\t1\n").unwrap();
        let err = load_schedule(&path, 10).unwrap_err();
        assert!(err.to_string().contains(":1:"), "{err}");
    }
}
