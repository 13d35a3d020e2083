//! Run manifests: after a command writes its outputs, it records what it
//! did in `run-manifest-<command>.txt` next to them. The manifest holds
//! the full effective config, the seed, and a SHA-256 per artifact, so
//! two runs can be compared by comparing manifests. No timestamps, no
//! absolute paths: manifests of identical runs are identical.

use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::config::PipelineConfig;
use crate::formats::FormatError;

pub fn sha256_file(path: &Path) -> Result<String, FormatError> {
    let bytes = std::fs::read(path).map_err(|e| FormatError::io(path, e))?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(hasher.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

/// Collects the artifacts a command produced, in the order it wrote them.
pub struct RunManifest {
    command: &'static str,
    out_dir: PathBuf,
    artifacts: Vec<(String, String)>,
}

impl RunManifest {
    pub fn new(command: &'static str, out_dir: &Path) -> Self {
        Self {
            command,
            out_dir: out_dir.to_path_buf(),
            artifacts: Vec::new(),
        }
    }

    /// Registers one output file, named relative to `base` (the output or
    /// data directory it was written under) so manifests of runs rooted in
    /// different directories stay comparable.
    pub fn record(&mut self, base: &Path, path: &Path) -> Result<(), FormatError> {
        let rel = path
            .strip_prefix(base)
            .unwrap_or(path)
            .to_string_lossy()
            .replace('\\', "/");
        self.artifacts.push((rel, sha256_file(path)?));
        Ok(())
    }

    /// Writes `run-manifest-<command>.txt` and returns its path.
    pub fn write(&self, config: &PipelineConfig) -> Result<PathBuf, FormatError> {
        let mut out = String::new();
        out.push_str(&format!("command = {}\n", self.command));
        out.push_str(&config.echo());
        for (rel, hash) in &self.artifacts {
            out.push_str(&format!("sha256 {hash} {rel}\n"));
        }
        let path = self.out_dir.join(format!("run-manifest-{}.txt", self.command));
        crate::formats::write_text(&path, &out)?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn sha256_matches_known_vector() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("x.txt");
        std::fs::write(&path, b"abc").unwrap();
        assert_eq!(
            sha256_file(&path).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn manifest_lists_config_and_artifacts_relatively() {
        let dir = tempdir().unwrap();
        let artifact = dir.path().join("scores.tsv");
        std::fs::write(&artifact, "a\t0\t0.5\n").unwrap();
        let mut manifest = RunManifest::new("flow", dir.path());
        manifest.record(dir.path(), &artifact).unwrap();
        let config = PipelineConfig::default();
        let path = manifest.write(&config).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("command = flow\n"));
        assert!(text.contains("seed = 0"));
        assert!(text.contains(" scores.tsv\n"));
        assert!(!text.contains(&dir.path().to_string_lossy().to_string()));
    }

    #[test]
    fn identical_runs_write_identical_manifests() {
        let dir = tempdir().unwrap();
        let artifact = dir.path().join("out.bin");
        std::fs::write(&artifact, [1u8, 2, 3]).unwrap();
        let config = PipelineConfig::default();
        let mut texts = Vec::new();
        for name in ["a", "b"] {
            let sub = dir.path().join(name);
            std::fs::create_dir(&sub).unwrap();
            let art = sub.join("out.bin");
            std::fs::write(&art, [1u8, 2, 3]).unwrap();
            let mut m = RunManifest::new("train", &sub);
            m.record(&sub, &art).unwrap();
            let p = m.write(&config).unwrap();
            texts.push(std::fs::read_to_string(p).unwrap());
        }
        assert_eq!(texts[0], texts[1]);
    }
}
