//! Model checkpoint file.
//!
//! Layout, all integers little-endian:
//! - magic `PFCK` (4 bytes)
//! - `u32` format version
//! - `u64` training iteration
//! - `u32` tensor count
//! - per tensor: `u32` rank, then rank `u32` dimensions
//! - per tensor, same order: the `f32` payload
//!
//! Tensor order is fixed: the 28 network state tensors in declaration
//! order, then the optimizer's first-moment tensors for the 22 trainable
//! parameters, then the second moments. Parameters are `f32` on both
//! sides, so save/load round-trips bit for bit.

use std::path::Path;

use poseforge_core::net::{
    shape_of, trainable_tensors, AdamState, ConvNetParams, ModelCheckpoint, Tensor, TrainConfig,
    CHECKPOINT_VERSION, STATE_TENSORS,
};

use super::FormatError;

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"PFCK";

/// Expected shape list: every state tensor, then m and v per trainable.
fn expected_shapes() -> Vec<&'static [usize]> {
    let mut shapes: Vec<&'static [usize]> = STATE_TENSORS.iter().map(|n| shape_of(n)).collect();
    for _ in 0..2 {
        shapes.extend(trainable_tensors().map(shape_of));
    }
    shapes
}

fn push_tensor(payload: &mut Vec<u8>, t: &Tensor) {
    for &x in t.data() {
        payload.extend_from_slice(&x.to_le_bytes());
    }
}

pub fn save_checkpoint(path: &Path, ckpt: &ModelCheckpoint) -> Result<(), FormatError> {
    let mut bytes = Vec::new();
    bytes.extend_from_slice(&CHECKPOINT_MAGIC);
    bytes.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    bytes.extend_from_slice(&ckpt.iteration.to_le_bytes());

    let tensors: Vec<&Tensor> = STATE_TENSORS
        .iter()
        .map(|n| ckpt.params.get(n))
        .chain(ckpt.adam.m.iter())
        .chain(ckpt.adam.v.iter())
        .collect();
    bytes.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for t in &tensors {
        bytes.extend_from_slice(&(t.shape().len() as u32).to_le_bytes());
        for &d in t.shape() {
            bytes.extend_from_slice(&(d as u32).to_le_bytes());
        }
    }
    for t in &tensors {
        push_tensor(&mut bytes, t);
    }
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| FormatError::io(path, e))?;
        }
    }
    std::fs::write(path, bytes).map_err(|e| FormatError::io(path, e))
}

struct Cursor<'a> {
    path: &'a Path,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], FormatError> {
        if self.pos + n > self.bytes.len() {
            return Err(FormatError::corrupt(
                self.path,
                format!("unexpected end of file at byte {}", self.bytes.len()),
            ));
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32, FormatError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64, FormatError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

/// Loads a checkpoint saved by [`save_checkpoint`]. The training config is
/// not part of the file; the caller supplies the one the run should use.
pub fn load_checkpoint(path: &Path, config: TrainConfig) -> Result<ModelCheckpoint, FormatError> {
    let bytes = std::fs::read(path).map_err(|e| FormatError::io(path, e))?;
    let mut cur = Cursor {
        path,
        bytes: &bytes,
        pos: 0,
    };
    if cur.take(4)? != CHECKPOINT_MAGIC {
        return Err(FormatError::corrupt(path, "bad magic, not a checkpoint file"));
    }
    let version = cur.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(FormatError::corrupt(
            path,
            format!("unsupported version {version}, expected {CHECKPOINT_VERSION}"),
        ));
    }
    let iteration = cur.u64()?;
    let expected = expected_shapes();
    let count = cur.u32()? as usize;
    if count != expected.len() {
        return Err(FormatError::corrupt(
            path,
            format!("{count} tensors, expected {}", expected.len()),
        ));
    }
    for (i, want) in expected.iter().enumerate() {
        let rank = cur.u32()? as usize;
        let mut dims = Vec::with_capacity(rank);
        for _ in 0..rank {
            dims.push(cur.u32()? as usize);
        }
        if dims != *want {
            return Err(FormatError::corrupt(
                path,
                format!("tensor {i} has shape {dims:?}, expected {want:?}"),
            ));
        }
    }

    let mut read_tensor = |shape: &[usize]| -> Result<Tensor, FormatError> {
        let n: usize = shape.iter().product();
        let raw = cur.take(n * 4)?;
        let data = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        Ok(Tensor::from_vec(shape, data))
    };

    // Seed values are irrelevant: every tensor is overwritten below.
    let mut params = ConvNetParams::init(0);
    for name in STATE_TENSORS {
        *params.get_mut(name) = read_tensor(shape_of(name))?;
    }
    let mut adam = AdamState::new();
    for slot in adam.m.iter_mut().chain(adam.v.iter_mut()) {
        let shape: Vec<usize> = slot.shape().to_vec();
        *slot = read_tensor(&shape)?;
    }
    adam.t = iteration;

    if cur.pos != bytes.len() {
        return Err(FormatError::corrupt(
            path,
            format!("{} trailing bytes after payload", bytes.len() - cur.pos),
        ));
    }

    Ok(ModelCheckpoint {
        version,
        params,
        adam,
        iteration,
        config,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn scrambled_checkpoint(seed: u64) -> ModelCheckpoint {
        let params = ConvNetParams::init(seed);
        let mut adam = AdamState::new();
        for (k, t) in adam.m.iter_mut().chain(adam.v.iter_mut()).enumerate() {
            for (i, x) in t.data_mut().iter_mut().enumerate() {
                *x = ((k * 31 + i * 7 + seed as usize) % 101) as f32 * 0.013 - 0.5;
            }
        }
        adam.t = 42;
        ModelCheckpoint {
            version: CHECKPOINT_VERSION,
            params,
            adam,
            iteration: 42,
            config: TrainConfig::default(),
        }
    }

    fn assert_tensors_equal(a: &ModelCheckpoint, b: &ModelCheckpoint) {
        for name in STATE_TENSORS {
            let (x, y) = (a.params.get(name), b.params.get(name));
            assert_eq!(x.shape(), y.shape(), "{name}");
            let bits = |t: &Tensor| t.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(x), bits(y), "{name}");
        }
        for (x, y) in a.adam.m.iter().zip(&b.adam.m) {
            assert_eq!(x.data(), y.data());
        }
        for (x, y) in a.adam.v.iter().zip(&b.adam.v) {
            assert_eq!(x.data(), y.data());
        }
    }

    #[test]
    fn round_trips_bit_exactly() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("model.pfck");
        let ckpt = scrambled_checkpoint(9);
        save_checkpoint(&path, &ckpt).unwrap();
        let back = load_checkpoint(&path, ckpt.config.clone()).unwrap();
        assert_eq!(back.iteration, 42);
        assert_eq!(back.adam.t, 42);
        assert_eq!(back.version, CHECKPOINT_VERSION);
        assert_tensors_equal(&ckpt, &back);
    }

    #[test]
    fn resaving_a_loaded_checkpoint_is_byte_identical() {
        let dir = tempdir().unwrap();
        let a = dir.path().join("a.pfck");
        let b = dir.path().join("b.pfck");
        let ckpt = scrambled_checkpoint(3);
        save_checkpoint(&a, &ckpt).unwrap();
        let loaded = load_checkpoint(&a, ckpt.config.clone()).unwrap();
        save_checkpoint(&b, &loaded).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }

    #[test]
    fn adam_time_follows_iteration() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("model.pfck");
        let mut ckpt = scrambled_checkpoint(1);
        ckpt.iteration = 77;
        ckpt.adam.t = 77;
        save_checkpoint(&path, &ckpt).unwrap();
        let back = load_checkpoint(&path, TrainConfig::default()).unwrap();
        assert_eq!(back.iteration, 77);
        assert_eq!(back.adam.t, 77);
    }

    #[test]
    fn caller_config_is_adopted() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("model.pfck");
        save_checkpoint(&path, &scrambled_checkpoint(2)).unwrap();
        let config = TrainConfig {
            base_lr: 0.123,
            total_iterations: 999,
            ..TrainConfig::default()
        };
        let back = load_checkpoint(&path, config.clone()).unwrap();
        assert_eq!(back.config, config);
    }

    #[test]
    fn bad_magic_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("model.pfck");
        std::fs::write(&path, b"NOPE____________").unwrap();
        let err = load_checkpoint(&path, TrainConfig::default()).unwrap_err();
        assert!(err.to_string().contains("magic"), "{err}");
    }

    #[test]
    fn unknown_version_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("model.pfck");
        save_checkpoint(&path, &scrambled_checkpoint(4)).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[4] = 0xFF;
        std::fs::write(&path, bytes).unwrap();
        let err = load_checkpoint(&path, TrainConfig::default()).unwrap_err();
        assert!(err.to_string().contains("version"), "{err}");
    }

    #[test]
    fn truncation_rejected_at_any_boundary() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("model.pfck");
        save_checkpoint(&path, &scrambled_checkpoint(5)).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        // Header, shape table, and payload truncations all fail cleanly.
        for keep in [3, 9, 14, 200, bytes.len() - 1] {
            std::fs::write(&path, &bytes[..keep]).unwrap();
            assert!(
                load_checkpoint(&path, TrainConfig::default()).is_err(),
                "accepted {keep}-byte prefix"
            );
        }
    }

    #[test]
    fn shape_mismatch_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("model.pfck");
        save_checkpoint(&path, &scrambled_checkpoint(6)).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        // First tensor in the shape table: rank at 16..20, dims follow.
        bytes[20] = 99;
        std::fs::write(&path, bytes).unwrap();
        let err = load_checkpoint(&path, TrainConfig::default()).unwrap_err();
        assert!(err.to_string().contains("shape"), "{err}");
    }

    #[test]
    fn trailing_garbage_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("model.pfck");
        save_checkpoint(&path, &scrambled_checkpoint(7)).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.extend_from_slice(&[1, 2, 3]);
        std::fs::write(&path, bytes).unwrap();
        let err = load_checkpoint(&path, TrainConfig::default()).unwrap_err();
        assert!(err.to_string().contains("trailing"), "{err}");
    }
}
