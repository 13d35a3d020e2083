//! Evaluation CSV output: comma-delimited, one header row, LF endings.
//! Cells must not contain commas or newlines; metric names and numbers
//! never do.

use std::path::Path;

use super::{write_text, FormatError};

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), FormatError> {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        assert_eq!(row.len(), header.len(), "row width must match header");
        for cell in row {
            assert!(
                !cell.contains(',') && !cell.contains('\n'),
                "cell {cell:?} needs quoting, which this writer does not do"
            );
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    write_text(path, &out)
}
