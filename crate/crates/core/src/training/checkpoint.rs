//! Checkpoint archive.
//!
//! All integers are little-endian.
//!
//! ```text
//! magic            8 bytes   "PDFNCKPT"
//! format version   u32
//! manifest length  u64
//! manifest         UTF-8 JSON {format_version, config, step, seed}
//! parameter count  u32
//! per parameter, in model layout order:
//!   name length    u32
//!   name           UTF-8
//!   dtype          u8        1 = f32
//!   rank           u32
//!   dims           u64 × rank
//!   byte length    u64
//!   data           row-major little-endian f32
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{build_variant, NetworkConfig};
use crate::params::ParamStore;

pub const MAGIC: &[u8; 8] = b"PDFNCKPT";
pub const FORMAT_VERSION: u32 = 1;
const DTYPE_F32: u8 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub format_version: u32,
    pub config: NetworkConfig,
    pub step: u64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub manifest: CheckpointManifest,
    pub params: ParamStore<f32>,
}

impl Checkpoint {
    pub fn config(&self) -> &NetworkConfig {
        &self.manifest.config
    }

    /// Parameters for a graph built from `config`; rejects checkpoints
    /// written for any other configuration.
    pub fn params_for(&self, config: &NetworkConfig) -> Result<&ParamStore<f32>> {
        if config != &self.manifest.config {
            let detail = if config.variant != self.manifest.config.variant {
                format!(
                    "checkpoint variant {} cannot be loaded into a {} graph",
                    self.manifest.config.variant, config.variant
                )
            } else {
                "widths, depths or input size differ".to_string()
            };
            return Err(Error::ConfigMismatch(detail));
        }
        Ok(&self.params)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let manifest = serde_json::to_vec(&self.manifest)?;
        let mut out = Vec::with_capacity(64 + manifest.len() + 4 * self.params.num_scalars());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&self.manifest.format_version.to_le_bytes());
        out.extend_from_slice(&(manifest.len() as u64).to_le_bytes());
        out.extend_from_slice(&manifest);
        out.extend_from_slice(&(self.params.len() as u32).to_le_bytes());
        for (name, p) in self.params.iter() {
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.push(DTYPE_F32);
            out.extend_from_slice(&(p.shape.len() as u32).to_le_bytes());
            for &d in &p.shape {
                out.extend_from_slice(&(d as u64).to_le_bytes());
            }
            out.extend_from_slice(&((p.data.len() * 4) as u64).to_le_bytes());
            for v in &p.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    /// Parses an archive and checks that it holds exactly the parameters of
    /// the network described by its own manifest.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::Checkpoint("not a checkpoint archive (bad magic)".into()));
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::VersionMismatch {
                found: version,
                expected: FORMAT_VERSION,
            });
        }
        let mlen = r.u64()? as usize;
        let manifest: CheckpointManifest = serde_json::from_slice(r.take(mlen)?)?;
        if manifest.format_version != version {
            return Err(Error::VersionMismatch {
                found: manifest.format_version,
                expected: FORMAT_VERSION,
            });
        }
        let count = r.u32()?;
        let mut params = ParamStore::new();
        for _ in 0..count {
            let nlen = r.u32()? as usize;
            let name = std::str::from_utf8(r.take(nlen)?)
                .map_err(|_| Error::Checkpoint("parameter name is not UTF-8".into()))?
                .to_string();
            let dtype = r.take(1)?[0];
            if dtype != DTYPE_F32 {
                return Err(Error::Checkpoint(format!(
                    "parameter `{name}` has unsupported dtype {dtype}"
                )));
            }
            let rank = r.u32()? as usize;
            let shape = (0..rank)
                .map(|_| r.u64().map(|d| d as usize))
                .collect::<Result<Vec<_>>>()?;
            let blen = r.u64()? as usize;
            if blen != 4 * shape.iter().product::<usize>() {
                return Err(Error::Checkpoint(format!(
                    "parameter `{name}`: {blen} bytes do not fit shape {shape:?}"
                )));
            }
            let data = r
                .take(blen)?
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            params
                .insert(&name, shape, data)
                .map_err(|e| Error::Checkpoint(e.to_string()))?;
        }
        if r.pos != bytes.len() {
            return Err(Error::Checkpoint(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        let model = build_variant(&manifest.config)?;
        params.check_layout(model.param_specs())?;
        Ok(Checkpoint { manifest, params })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Checkpoint("archive is truncated".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

pub fn save_checkpoint(
    params: &ParamStore<f32>,
    config: &NetworkConfig,
    step: u64,
    seed: u64,
    path: &Path,
) -> Result<()> {
    let model = build_variant(config)?;
    params.check_layout(model.param_specs())?;
    let ckpt = Checkpoint {
        manifest: CheckpointManifest {
            format_version: FORMAT_VERSION,
            config: config.clone(),
            step,
            seed,
        },
        params: params.clone(),
    };
    fs::write(path, ckpt.to_bytes()?).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Checkpoint::from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Variant;
    use crate::training::{init_params, TrainConfig};

    fn sample() -> Checkpoint {
        let cfg = NetworkConfig::tiny();
        let model = build_variant(&cfg).unwrap();
        let mut tc = TrainConfig::new(1);
        tc.seed = 9;
        Checkpoint {
            manifest: CheckpointManifest {
                format_version: FORMAT_VERSION,
                config: cfg,
                step: 17,
                seed: 9,
            },
            params: init_params(&model, &tc),
        }
    }

    #[test]
    fn bytes_round_trip() {
        let c = sample();
        let bytes = c.to_bytes().unwrap();
        let back = Checkpoint::from_bytes(&bytes).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_bytes().unwrap(), bytes);
    }

    #[test]
    fn rejects_other_versions_and_truncation() {
        let mut bytes = sample().to_bytes().unwrap();
        assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        bytes[8] = 2;
        assert!(matches!(
            Checkpoint::from_bytes(&bytes),
            Err(Error::VersionMismatch { found: 2, .. })
        ));
    }

    #[test]
    fn variant_mismatch_is_rejected() {
        let c = sample();
        let other = NetworkConfig::tiny().with_variant(Variant::NoDc);
        assert!(matches!(c.params_for(&other), Err(Error::ConfigMismatch(_))));
        assert!(c.params_for(&NetworkConfig::tiny()).is_ok());
    }
}
