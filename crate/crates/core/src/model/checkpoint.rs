//! Checkpoint file: 8-byte magic, little-endian u64 header length, a JSON
//! header naming every tensor (shape, frozen flag), then each tensor's
//! values as little-endian f32 in header order.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::bpe::BpeVocab;
use super::dual::DualEncoder;
use super::{ModelConfig, ModelError, Result};

const MAGIC: &[u8; 8] = b"OFCKPT\0\x01";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: [usize; 2],
    pub frozen: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub model: ModelConfig,
    pub spec_shape: (usize, usize),
    pub vocab: BpeVocab,
    pub tensors: Vec<TensorEntry>,
    /// Free-form provenance (configs, hashes, corpus ids).
    pub meta: serde_json::Value,
}

fn corrupt(msg: impl Into<String>) -> ModelError {
    ModelError::Checkpoint(msg.into())
}

pub fn save_checkpoint<W: Write>(mut out: W, model: &DualEncoder, meta: serde_json::Value) -> Result<()> {
    let header = CheckpointHeader {
        model: model.config().clone(),
        spec_shape: model.spec_shape(),
        vocab: model.vocab().clone(),
        tensors: model
            .store()
            .iter()
            .map(|(_, p)| TensorEntry {
                name: p.name.clone(),
                shape: [p.value.nrows(), p.value.ncols()],
                frozen: p.frozen,
            })
            .collect(),
        meta,
    };
    let json = serde_json::to_vec(&header).map_err(|e| corrupt(e.to_string()))?;
    out.write_all(MAGIC)?;
    out.write_all(&(json.len() as u64).to_le_bytes())?;
    out.write_all(&json)?;
    let mut buf = Vec::with_capacity(model.store().total_count() * 4);
    for (_, p) in model.store().iter() {
        for &v in p.value.iter() {
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out.write_all(&buf)?;
    out.flush()?;
    Ok(())
}

fn read_header<R: Read>(input: &mut R) -> Result<CheckpointHeader> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(corrupt("bad magic"));
    }
    let mut len = [0u8; 8];
    input.read_exact(&mut len)?;
    let len = u64::from_le_bytes(len) as usize;
    let mut json = vec![0u8; len];
    input.read_exact(&mut json)?;
    let mut header: CheckpointHeader = serde_json::from_slice(&json).map_err(|e| corrupt(e.to_string()))?;
    header.vocab.rebuild_ranks();
    Ok(header)
}

pub fn read_checkpoint_header(path: &Path) -> Result<CheckpointHeader> {
    read_header(&mut std::io::BufReader::new(std::fs::File::open(path)?))
}

/// Rebuild the encoder and overwrite every tensor with the stored values.
pub fn load_checkpoint<R: Read>(mut input: R) -> Result<(DualEncoder, CheckpointHeader)> {
    let header = read_header(&mut input)?;
    let mut model = DualEncoder::new(header.model.clone(), header.vocab.clone(), header.spec_shape, 0)?;
    if header.tensors.len() != model.store().len() {
        return Err(corrupt(format!(
            "{} tensors in file, model has {}",
            header.tensors.len(),
            model.store().len()
        )));
    }
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let expected: usize = header.tensors.iter().map(|t| t.shape[0] * t.shape[1] * 4).sum();
    if bytes.len() != expected {
        return Err(corrupt(format!("{} data bytes, expected {expected}", bytes.len())));
    }
    let mut offset = 0;
    for entry in &header.tensors {
        let id = model
            .store()
            .find(&entry.name)
            .ok_or_else(|| corrupt(format!("unknown tensor {}", entry.name)))?;
        let dst = model.store_mut().value_mut(id);
        if dst.dim() != (entry.shape[0], entry.shape[1]) {
            return Err(corrupt(format!("shape mismatch for {}", entry.name)));
        }
        for v in dst.iter_mut() {
            let raw: [u8; 4] = bytes[offset..offset + 4].try_into().expect("4 bytes");
            *v = f64::from(f32::from_le_bytes(raw));
            offset += 4;
        }
        model.store_mut().set_frozen(id, entry.frozen);
    }
    Ok((model, header))
}
