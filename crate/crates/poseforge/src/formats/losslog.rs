//! Training loss log: `iteration<TAB>l_temporal<TAB>l_spatial<TAB>total`
//! per logging step. Floats use shortest round-trip formatting, so two
//! identical runs produce byte-identical logs and a reload reproduces the
//! recorded values exactly.

use std::path::Path;

use poseforge_core::net::LossRecord;

use super::{parse_field, read_numbered_lines, split_fields, write_text, FormatError};

pub fn save_loss_log(path: &Path, records: &[LossRecord]) -> Result<(), FormatError> {
    let mut out = String::new();
    for r in records {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            r.iteration, r.l_temporal, r.l_spatial, r.total
        ));
    }
    write_text(path, &out)
}

pub fn load_loss_log(path: &Path) -> Result<Vec<LossRecord>, FormatError> {
    let mut records = Vec::new();
    for (lineno, line) in read_numbered_lines(path)? {
        let f = split_fields(path, lineno, &line, 4)?;
        records.push(LossRecord {
            iteration: parse_field(path, lineno, "iteration", f[0])?,
            l_temporal: parse_field(path, lineno, "l_temporal", f[1])?,
            l_spatial: parse_field(path, lineno, "l_spatial", f[2])?,
            total: parse_field(path, lineno, "total", f[3])?,
        });
    }
    Ok(records)
}
