//! Binary checkpoint: magic, format version, JSON config block, then every
//! parameter tensor in layout order as little-endian f32. A JSON manifest and
//! a plain vocabulary file are written next to it.

use std::fs;
use std::io::{Cursor, Read};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{layout_for, AbsaModel, LcfModel, ModelConfig, ModelError, Vocab};

pub const MAGIC: &[u8; 8] = b"LCFABSA\0";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub config: ModelConfig,
    pub tensors: Vec<TensorEntry>,
    pub vocab: Vec<String>,
}

pub fn manifest_path(checkpoint: &Path) -> PathBuf {
    checkpoint.with_extension("json")
}

pub fn vocab_path(checkpoint: &Path) -> PathBuf {
    checkpoint.with_extension("vocab.txt")
}

fn bad(msg: impl Into<String>) -> ModelError {
    ModelError::Checkpoint(msg.into())
}

/// Checkpoint bytes for `model`.
pub fn encode_checkpoint(model: &LcfModel) -> Vec<u8> {
    let config = serde_json::to_vec(model.config()).expect("config serializes");
    let mut out = Vec::with_capacity(32 + config.len() + model.num_params() * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(config.len() as u32).to_le_bytes());
    out.extend_from_slice(&config);
    let layout = model.layout();
    out.extend_from_slice(&(layout.tensors.len() as u32).to_le_bytes());
    for t in &layout.tensors {
        out.extend_from_slice(&(t.name.len() as u32).to_le_bytes());
        out.extend_from_slice(t.name.as_bytes());
        out.extend_from_slice(&(t.shape.len() as u32).to_le_bytes());
        for &dim in &t.shape {
            out.extend_from_slice(&(dim as u32).to_le_bytes());
        }
        for &v in &model.params()[t.offset..t.offset + t.numel()] {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

fn read_u32(r: &mut Cursor<&[u8]>) -> Result<u32, ModelError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(|_| bad("truncated checkpoint"))?;
    Ok(u32::from_le_bytes(b))
}

fn read_bytes(r: &mut Cursor<&[u8]>, len: usize) -> Result<Vec<u8>, ModelError> {
    let remaining = r.get_ref().len() - r.position() as usize;
    if len > remaining {
        return Err(bad("truncated checkpoint"));
    }
    let mut b = vec![0u8; len];
    r.read_exact(&mut b).map_err(|_| bad("truncated checkpoint"))?;
    Ok(b)
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<LcfModel, ModelError> {
    let mut r = Cursor::new(bytes);
    if read_bytes(&mut r, MAGIC.len())? != MAGIC {
        return Err(bad("not a checkpoint (bad magic)"));
    }
    let version = read_u32(&mut r)?;
    if version != FORMAT_VERSION {
        return Err(bad(format!("unsupported checkpoint version {version}")));
    }
    let config_len = read_u32(&mut r)? as usize;
    let config: ModelConfig = serde_json::from_slice(&read_bytes(&mut r, config_len)?)
        .map_err(|e| bad(format!("config block: {e}")))?;
    config.validate()?;
    let expected = layout_for(&config);
    let count = read_u32(&mut r)? as usize;
    if count != expected.tensors.len() {
        return Err(bad(format!("expected {} tensors, found {count}", expected.tensors.len())));
    }
    let mut params = Vec::with_capacity(expected.total);
    for spec in &expected.tensors {
        let name_len = read_u32(&mut r)? as usize;
        let name = String::from_utf8(read_bytes(&mut r, name_len)?).map_err(|_| bad("tensor name is not UTF-8"))?;
        let ndim = read_u32(&mut r)? as usize;
        let mut shape = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            shape.push(read_u32(&mut r)? as usize);
        }
        if name != spec.name || shape != spec.shape {
            return Err(bad(format!(
                "tensor mismatch: found {name} {shape:?}, expected {} {:?}",
                spec.name, spec.shape
            )));
        }
        let data = read_bytes(&mut r, spec.numel() * 4)?;
        params.extend(
            data.chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64),
        );
    }
    if (r.position() as usize) != bytes.len() {
        return Err(bad("trailing bytes after last tensor"));
    }
    LcfModel::from_params(config, params)
}

impl AbsaModel {
    /// Writes the checkpoint, its manifest sidecar and the vocabulary file.
    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, encode_checkpoint(&self.model))?;
        let manifest = Manifest {
            format_version: FORMAT_VERSION,
            config: self.model.config().clone(),
            tensors: self
                .model
                .layout()
                .tensors
                .iter()
                .map(|t| TensorEntry { name: t.name.clone(), shape: t.shape.clone() })
                .collect(),
            vocab: self.vocab.words().to_vec(),
        };
        let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        fs::write(manifest_path(path), json + "\n")?;
        fs::write(vocab_path(path), self.vocab.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        if !path.exists() {
            return Err(ModelError::MissingCheckpoint(path.to_path_buf()));
        }
        let model = decode_checkpoint(&fs::read(path)?)?;
        let manifest_file = manifest_path(path);
        let manifest: Manifest = serde_json::from_str(&fs::read_to_string(&manifest_file).map_err(|e| {
            bad(format!("reading manifest {}: {e}", manifest_file.display()))
        })?)
        .map_err(|e| bad(format!("manifest: {e}")))?;
        if &manifest.config != model.config() {
            return Err(bad("manifest config differs from checkpoint config"));
        }
        let vocab = Vocab::from_list(manifest.vocab).map_err(bad)?;
        AbsaModel::new(vocab, model)
    }
}
