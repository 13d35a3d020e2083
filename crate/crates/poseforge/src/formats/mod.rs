//! On-disk formats for every pipeline artifact.
//!
//! Text formats are tab-separated, one record per line, UTF-8 with LF line
//! endings. Floats are written with Rust's shortest round-trip `Display`,
//! so a write/read cycle reproduces values bit for bit. Binary formats
//! carry a four-byte magic and little-endian fixed-width fields. Readers
//! are strict: every reported error names the file and, for text formats,
//! the 1-based line number.

pub mod checkpoint;
pub mod csvout;
pub mod dataset;
pub mod groups;
pub mod losslog;
pub mod pgm;
pub mod planes;
pub mod schedule;
pub mod scores;
pub mod sidecar;
pub mod svg;
pub mod tuples;

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}:{line}: {what}", path.display())]
    Malformed {
        path: PathBuf,
        line: usize,
        what: String,
    },
    #[error("{}: {what}", path.display())]
    Corrupt { path: PathBuf, what: String },
    #[error("{}: {source}", path.display())]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
    #[error("{}: {source}", path.display())]
    Data {
        path: PathBuf,
        #[source]
        source: poseforge_core::data::DataError,
    },
    #[error("{}: {source}", path.display())]
    Schedule {
        path: PathBuf,
        #[source]
        source: poseforge_core::curriculum::CurriculumError,
    },
}

impl FormatError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn corrupt(path: &Path, what: impl Into<String>) -> Self {
        Self::Corrupt {
            path: path.to_path_buf(),
            what: what.into(),
        }
    }

    pub(crate) fn malformed(path: &Path, line: usize, what: impl Display) -> Self {
        Self::Malformed {
            path: path.to_path_buf(),
            line,
            what: what.to_string(),
        }
    }
}

/// Reads a text file and yields `(1-based line number, line)` for each
/// non-empty line. Blank lines are tolerated; readers stay strict about
/// everything else.
pub(crate) fn read_numbered_lines(path: &Path) -> Result<Vec<(usize, String)>, FormatError> {
    let text = std::fs::read_to_string(path).map_err(|e| FormatError::io(path, e))?;
    Ok(text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l.to_string()))
        .collect())
}

/// Parses one field, naming the field and line on failure.
pub(crate) fn parse_field<T: FromStr>(
    path: &Path,
    line: usize,
    name: &str,
    raw: &str,
) -> Result<T, FormatError> {
    raw.parse().map_err(|_| {
        FormatError::malformed(path, line, format!("bad {name} value {raw:?}"))
    })
}

/// Splits a record into exactly `n` tab-separated fields.
pub(crate) fn split_fields<'a>(
    path: &Path,
    line: usize,
    record: &'a str,
    n: usize,
) -> Result<Vec<&'a str>, FormatError> {
    let fields: Vec<&str> = record.split('\t').collect();
    if fields.len() != n {
        return Err(FormatError::malformed(
            path,
            line,
            format!("expected {n} tab-separated fields, got {}", fields.len()),
        ));
    }
    Ok(fields)
}

/// Writes a text file atomically enough for our purposes: build the whole
/// string, then one `fs::write`.
pub(crate) fn write_text(path: &Path, text: &str) -> Result<(), FormatError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| FormatError::io(path, e))?;
        }
    }
    std::fs::write(path, text).map_err(|e| FormatError::io(path, e))
}

/// Parses `x,y(,...)` comma-joined floats into exactly `n` values.
pub(crate) fn parse_csv_floats(
    path: &Path,
    line: usize,
    name: &str,
    raw: &str,
    n: usize,
) -> Result<Vec<f32>, FormatError> {
    let parts: Vec<&str> = raw.split(',').collect();
    if parts.len() != n {
        return Err(FormatError::malformed(
            path,
            line,
            format!("{name} needs {n} comma-separated values, got {}", parts.len()),
        ));
    }
    parts
        .iter()
        .map(|p| parse_field(path, line, name, p))
        .collect()
}
