use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub tool_version: String,
    pub artifacts: Vec<Artifact>,
}

pub fn sha256_file(path: &Path) -> Result<(u64, String)> {
    let bytes = fs::read(path).with_context(|| format!("hashing {}", path.display()))?;
    Ok((bytes.len() as u64, hex::encode(Sha256::digest(&bytes))))
}

/// Collects the files a command writes under its output directory.
pub struct ManifestBuilder {
    root: PathBuf,
    command: String,
    files: Vec<PathBuf>,
}

impl ManifestBuilder {
    pub fn new(root: &Path, command: &str) -> Self {
        ManifestBuilder {
            root: root.to_path_buf(),
            command: command.to_string(),
            files: Vec::new(),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Path of a new artifact, recorded for hashing.
    pub fn artifact(&mut self, relative: impl AsRef<Path>) -> Result<PathBuf> {
        let path = self.root.join(relative.as_ref());
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
        if !self.files.contains(&path) {
            self.files.push(path.clone());
        }
        Ok(path)
    }

    pub fn write(&mut self, relative: impl AsRef<Path>, contents: impl AsRef<[u8]>) -> Result<PathBuf> {
        let path = self.artifact(relative)?;
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    /// Hashes every recorded artifact and writes the manifest last.
    pub fn finish(self) -> Result<Manifest> {
        let mut artifacts = Vec::with_capacity(self.files.len());
        for path in &self.files {
            let (bytes, sha256) = sha256_file(path)?;
            let rel = path.strip_prefix(&self.root).unwrap_or(path);
            let rel = rel
                .components()
                .map(|c| c.as_os_str().to_string_lossy())
                .collect::<Vec<_>>()
                .join("/");
            artifacts.push(Artifact {
                path: rel,
                bytes,
                sha256,
            });
        }
        artifacts.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = Manifest {
            command: self.command,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            artifacts,
        };
        let path = self.root.join(MANIFEST_FILE);
        fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(manifest)
    }
}

/// Re-hashes every listed artifact and reports the ones that changed.
pub fn verify(root: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(root.join(MANIFEST_FILE)).context("reading manifest")?;
    let manifest: Manifest = serde_json::from_str(&text)?;
    let mut bad = Vec::new();
    for a in &manifest.artifacts {
        match sha256_file(&root.join(&a.path)) {
            Ok((bytes, sha)) if bytes == a.bytes && sha == a.sha256 => {}
            _ => bad.push(a.path.clone()),
        }
    }
    Ok(bad)
}
