//! Mined repetition groups: `video_id<TAB>anchor<TAB>repeat,repeat,...`
//! per line. Repeat lists are comma-separated ascending frame indices.

use std::path::Path;

use poseforge_core::repetition::RepetitionGroup;

use super::{parse_field, read_numbered_lines, split_fields, write_text, FormatError};

pub fn save_groups(path: &Path, groups: &[RepetitionGroup]) -> Result<(), FormatError> {
    let mut out = String::new();
    for g in groups {
        let repeats: Vec<String> = g.repeat_indices.iter().map(|r| r.to_string()).collect();
        out.push_str(&format!(
            "{}\t{}\t{}\n",
            g.video_id,
            g.anchor_index,
            repeats.join(",")
        ));
    }
    write_text(path, &out)
}

pub fn load_groups(path: &Path) -> Result<Vec<RepetitionGroup>, FormatError> {
    let mut groups = Vec::new();
    for (lineno, line) in read_numbered_lines(path)? {
        let f = split_fields(path, lineno, &line, 3)?;
        let repeat_indices: Result<Vec<usize>, _> = f[2]
            .split(',')
            .map(|r| parse_field(path, lineno, "repeat index", r))
            .collect();
        let repeat_indices = repeat_indices?;
        if repeat_indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(FormatError::malformed(
                path,
                lineno,
                "repeat indices must be strictly ascending",
            ));
        }
        groups.push(RepetitionGroup {
            video_id: f[0].to_string(),
            anchor_index: parse_field(path, lineno, "anchor", f[1])?,
            repeat_indices,
        });
    }
    Ok(groups)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn round_trips_groups() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("groups.tsv");
        let groups = vec![
            RepetitionGroup {
                video_id: "v0".to_string(),
                anchor_index: 50,
                repeat_indices: vec![30, 70],
            },
            RepetitionGroup {
                video_id: "v1".to_string(),
                anchor_index: 12,
                repeat_indices: vec![32],
            },
        ];
        save_groups(&path, &groups).unwrap();
        assert_eq!(load_groups(&path).unwrap(), groups);
    }

    #[test]
    fn unsorted_repeats_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("groups.tsv");
        std::fs::write(&path, "v\t5\t9,3\n").unwrap();
        let err = load_groups(&path).unwrap_err();
        assert!(err.to_string().contains("ascending"), "{err}");
    }
}
