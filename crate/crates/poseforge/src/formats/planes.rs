//! Binary plane files: a four-byte magic, `u32` height, `u32` width, then
//! one or more `height * width` planes of little-endian `f32`.
//!
//! Three artifacts share the layout:
//! - `PFLW` flow cache: two planes, horizontal then vertical displacement;
//! - `PSSM` self-similarity dump: one square plane of distances;
//! - `PEMB` embedding matrix: one plane, rows are per-frame embeddings.

use std::path::Path;

use poseforge_core::flow::FlowField;
use poseforge_core::repetition::{EmbeddingSequence, SelfSimilarityMatrix};

use super::FormatError;

pub const FLOW_MAGIC: [u8; 4] = *b"PFLW";
pub const SSM_MAGIC: [u8; 4] = *b"PSSM";
pub const EMBED_MAGIC: [u8; 4] = *b"PEMB";

/// Limits a corrupt header's damage: no plane dimension may claim more
/// than 1<<28 values (1 GiB of f32 per plane).
const MAX_PLANE_VALUES: u64 = 1 << 28;

pub fn write_planes(
    path: &Path,
    magic: [u8; 4],
    height: u32,
    width: u32,
    planes: &[&[f32]],
) -> Result<(), FormatError> {
    let expected = height as usize * width as usize;
    for plane in planes {
        assert_eq!(plane.len(), expected, "plane size must match header");
    }
    let mut bytes = Vec::with_capacity(12 + expected * 4 * planes.len());
    bytes.extend_from_slice(&magic);
    bytes.extend_from_slice(&height.to_le_bytes());
    bytes.extend_from_slice(&width.to_le_bytes());
    for plane in planes {
        for &x in *plane {
            bytes.extend_from_slice(&x.to_le_bytes());
        }
    }
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| FormatError::io(path, e))?;
        }
    }
    std::fs::write(path, bytes).map_err(|e| FormatError::io(path, e))
}

pub fn read_planes(
    path: &Path,
    magic: [u8; 4],
    n_planes: usize,
) -> Result<(u32, u32, Vec<Vec<f32>>), FormatError> {
    let bytes = std::fs::read(path).map_err(|e| FormatError::io(path, e))?;
    if bytes.len() < 12 {
        return Err(FormatError::corrupt(path, "file shorter than header"));
    }
    if bytes[..4] != magic {
        return Err(FormatError::corrupt(
            path,
            format!(
                "bad magic {:?}, expected {:?}",
                &bytes[..4],
                std::str::from_utf8(&magic).expect("magic is ascii")
            ),
        ));
    }
    let height = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    let width = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    let n_values = height as u64 * width as u64;
    if n_values > MAX_PLANE_VALUES {
        return Err(FormatError::corrupt(
            path,
            format!("implausible dimensions {height}x{width}"),
        ));
    }
    let expected_len = 12 + n_values as usize * 4 * n_planes;
    if bytes.len() != expected_len {
        return Err(FormatError::corrupt(
            path,
            format!(
                "expected {expected_len} bytes for {n_planes} {height}x{width} planes, got {}",
                bytes.len()
            ),
        ));
    }
    let mut planes = Vec::with_capacity(n_planes);
    let mut offset = 12;
    for _ in 0..n_planes {
        let plane: Vec<f32> = bytes[offset..offset + n_values as usize * 4]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        planes.push(plane);
        offset += n_values as usize * 4;
    }
    Ok((height, width, planes))
}

pub fn save_flow(path: &Path, flow: &FlowField) -> Result<(), FormatError> {
    write_planes(path, FLOW_MAGIC, flow.height(), flow.width(), &[&flow.u, &flow.v])
}

pub fn load_flow(path: &Path) -> Result<FlowField, FormatError> {
    let (h, w, mut planes) = read_planes(path, FLOW_MAGIC, 2)?;
    let v = planes.pop().expect("two planes");
    let u = planes.pop().expect("two planes");
    FlowField::new(w, h, u, v).map_err(|e| FormatError::corrupt(path, e.to_string()))
}

pub fn save_ssm(path: &Path, ssm: &SelfSimilarityMatrix) -> Result<(), FormatError> {
    let n = ssm.len() as u32;
    write_planes(path, SSM_MAGIC, n, n, &[ssm.values()])
}

pub fn load_ssm(path: &Path, video_id: &str) -> Result<SelfSimilarityMatrix, FormatError> {
    let (h, w, mut planes) = read_planes(path, SSM_MAGIC, 1)?;
    if h != w {
        return Err(FormatError::corrupt(
            path,
            format!("self-similarity matrix must be square, got {h}x{w}"),
        ));
    }
    Ok(SelfSimilarityMatrix::from_raw(
        video_id.to_string(),
        h as usize,
        planes.pop().expect("one plane"),
    ))
}

pub fn save_embeddings(path: &Path, seq: &EmbeddingSequence) -> Result<(), FormatError> {
    let rows: Vec<f32> = (0..seq.len()).flat_map(|i| seq.row(i).iter().copied()).collect();
    write_planes(path, EMBED_MAGIC, seq.len() as u32, seq.dim() as u32, &[&rows])
}

pub fn load_embeddings(path: &Path, video_id: &str) -> Result<EmbeddingSequence, FormatError> {
    let (n, dim, mut planes) = read_planes(path, EMBED_MAGIC, 1)?;
    if dim == 0 {
        return Err(FormatError::corrupt(path, "embedding dimension is zero"));
    }
    Ok(EmbeddingSequence::from_rows(
        video_id.to_string(),
        n as usize,
        dim as usize,
        planes.pop().expect("one plane"),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn flow_round_trips_bit_exactly() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("f.pflw");
        let n = 6 * 4;
        let u: Vec<f32> = (0..n).map(|i| (i as f32).sin() * 3.0).collect();
        let v: Vec<f32> = (0..n).map(|i| (i as f32).cos() - 0.5).collect();
        let flow = FlowField::new(6, 4, u.clone(), v.clone()).unwrap();
        save_flow(&path, &flow).unwrap();
        let back = load_flow(&path).unwrap();
        assert_eq!(back.width(), 6);
        assert_eq!(back.height(), 4);
        let bits = |xs: &[f32]| xs.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back.u), bits(&u));
        assert_eq!(bits(&back.v), bits(&v));
    }

    #[test]
    fn embeddings_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("e.pemb");
        let data: Vec<f32> = (0..15).map(|i| i as f32 * 0.125).collect();
        let seq = EmbeddingSequence::from_rows("clip".to_string(), 5, 3, data.clone());
        save_embeddings(&path, &seq).unwrap();
        let back = load_embeddings(&path, "clip").unwrap();
        assert_eq!(back.len(), 5);
        assert_eq!(back.dim(), 3);
        for i in 0..5 {
            assert_eq!(back.row(i), seq.row(i));
        }
    }

    #[test]
    fn ssm_round_trips_and_survives_accessors() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.pssm");
        let n = 4;
        let vals: Vec<f32> = (0..n * n)
            .map(|k| {
                let (i, j) = (k / n, k % n);
                (i as f32 - j as f32).abs()
            })
            .collect();
        let ssm = SelfSimilarityMatrix::from_raw("v".to_string(), n, vals);
        save_ssm(&path, &ssm).unwrap();
        let back = load_ssm(&path, "v").unwrap();
        assert_eq!(back.len(), n);
        for i in 0..n {
            for j in 0..n {
                assert_eq!(back.get(i, j), ssm.get(i, j));
            }
        }
    }

    #[test]
    fn wrong_magic_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("f.pflw");
        let flow = FlowField::new(2, 2, vec![0.0; 4], vec![0.0; 4]).unwrap();
        save_flow(&path, &flow).unwrap();
        let err = load_embeddings(&path, "x").unwrap_err();
        assert!(err.to_string().contains("magic"), "{err}");
    }

    #[test]
    fn truncated_file_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("f.pflw");
        let flow = FlowField::new(3, 3, vec![1.0; 9], vec![2.0; 9]).unwrap();
        save_flow(&path, &flow).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 5]).unwrap();
        let err = load_flow(&path).unwrap_err();
        assert!(err.to_string().contains("expected"), "{err}");
    }

    #[test]
    fn header_shorter_than_magic_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("f.pflw");
        std::fs::write(&path, b"PF").unwrap();
        let err = load_flow(&path).unwrap_err();
        assert!(err.to_string().contains("header"), "{err}");
    }

    #[test]
    fn implausible_dimensions_rejected_without_allocating() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("f.pflw");
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"PFLW");
        bytes.extend_from_slice(&u32::MAX.to_le_bytes());
        bytes.extend_from_slice(&u32::MAX.to_le_bytes());
        std::fs::write(&path, bytes).unwrap();
        let err = load_flow(&path).unwrap_err();
        assert!(err.to_string().contains("implausible"), "{err}");
    }

    #[test]
    fn rectangular_ssm_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.pssm");
        write_planes(&path, SSM_MAGIC, 2, 3, &[&[0.0; 6]]).unwrap();
        let err = load_ssm(&path, "v").unwrap_err();
        assert!(err.to_string().contains("square"), "{err}");
    }
}
