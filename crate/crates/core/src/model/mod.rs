//! Audio/text dual encoder: BPE text front end, patch-embedding audio front
//! end, frozen transformer trunks with LoRA on the attention query/value
//! projections, and MLP projection heads into a shared embedding space.

pub mod bpe;
mod checkpoint;
mod dual;
mod layers;
mod lora;
mod params;

pub use bpe::BpeVocab;
pub use checkpoint::{load_checkpoint, read_checkpoint_header, save_checkpoint, CheckpointHeader, TensorEntry};
pub use dual::{DualEncoder, Modality};
pub use layers::{Dense, EncoderTrunk, LoraLinear, ProjectionHead};
pub use lora::{lora_dense, LoraAdapter};
pub use params::{Bound, Param, ParamId, ParamStore};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("vocabulary size {requested} below minimum {minimum}")]
    VocabTooSmall { requested: usize, minimum: usize },
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("LoRA rank {rank} exceeds min(d, k) / 2 = {limit}")]
    RankTooLarge { rank: usize, limit: usize },
    #[error("empty token sequence")]
    EmptyTokens,
    #[error("token sequence of length {len} exceeds max_len {max_len}")]
    TooManyTokens { len: usize, max_len: usize },
    #[error("token id {0} outside vocabulary")]
    TokenOutOfRange(u32),
    #[error("empty patch sequence")]
    EmptyPatchSequence,
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, ModelError>;

/// Shape of the dual encoder. Both trunks share width and depth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub d_model: usize,
    pub n_heads: usize,
    pub n_layers: usize,
    pub ffn_dim: usize,
    /// Shared embedding dimension D.
    pub embed_dim: usize,
    pub head_hidden: usize,
    pub lora_rank: usize,
    pub lora_alpha: f64,
    pub vocab_size: usize,
    pub max_len: usize,
    pub patch_size: usize,
    pub patch_stride: usize,
    /// Let the optimizer update the audio patch projection as well.
    pub train_patch_projection: bool,
    pub tau_init: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            d_model: 64,
            n_heads: 4,
            n_layers: 2,
            ffn_dim: 256,
            embed_dim: 32,
            head_hidden: 32,
            lora_rank: 4,
            lora_alpha: 8.0,
            vocab_size: 512,
            max_len: 77,
            patch_size: 16,
            patch_stride: 10,
            train_patch_projection: false,
            tau_init: 0.07,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(ModelError::InvalidConfig(m.to_string()));
        if self.d_model == 0 || self.n_heads == 0 || !self.d_model.is_multiple_of(self.n_heads) {
            return bad("d_model must be a positive multiple of n_heads");
        }
        if self.embed_dim == 0 || self.head_hidden == 0 || self.ffn_dim == 0 {
            return bad("zero-sized layer");
        }
        if self.lora_rank == 0 || self.lora_rank > self.d_model / 2 {
            return Err(ModelError::RankTooLarge {
                rank: self.lora_rank,
                limit: self.d_model / 2,
            });
        }
        if !(self.tau_init > 0.0) {
            return bad("tau_init must be positive");
        }
        if self.patch_size == 0 || self.patch_stride == 0 {
            return bad("patch size and stride must be positive");
        }
        Ok(())
    }
}
