use ndarray::{s, Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::bpe::BpeVocab;
use super::layers::{gaussian, Dense, EncoderTrunk, LoraLinear, ProjectionHead};
use super::params::{Bound, ParamId, ParamStore};
use super::{ModelConfig, ModelError, Result};
use crate::autograd::{Tape, Var};
use crate::dsp::{extract_patches, patch_count};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Audio,
    Text,
}

/// Per-feature normalization applied to log-mel values before patch
/// projection.
const INPUT_MEAN: f64 = -4.27;
const INPUT_STD: f64 = 4.57;

pub const TAU_MIN: f64 = 1e-3;
pub const TAU_MAX: f64 = 100.0;

#[derive(Debug, Clone, PartialEq)]
pub struct DualEncoder {
    config: ModelConfig,
    spec_shape: (usize, usize),
    n_patches: usize,
    vocab: BpeVocab,
    store: ParamStore,
    token_embedding: ParamId,
    text_positions: ParamId,
    text_trunk: EncoderTrunk,
    text_head: ProjectionHead,
    patch_projection: Dense,
    audio_positions: ParamId,
    audio_trunk: EncoderTrunk,
    audio_head: ProjectionHead,
    log_tau: ParamId,
}

impl DualEncoder {
    /// Randomly initialized trunks (frozen), zero-initialized LoRA `B`
    /// factors, and fresh projection heads.
    ///
    /// `spec_shape` is the (frames, mel bins) shape of the audio input.
    pub fn new(config: ModelConfig, vocab: BpeVocab, spec_shape: (usize, usize), seed: u64) -> Result<Self> {
        config.validate()?;
        if vocab.max_len() != config.max_len {
            return Err(ModelError::InvalidConfig(format!(
                "vocabulary max_len {} differs from model max_len {}",
                vocab.max_len(),
                config.max_len
            )));
        }
        let n_patches = patch_count(spec_shape.0, spec_shape.1, config.patch_size, config.patch_stride)
            .map_err(|e| ModelError::InvalidConfig(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::default();
        let d = config.d_model;

        let token_embedding = store.add("text.token_embedding", gaussian(&mut rng, vocab.vocab_size(), d, 1.0), true);
        let text_positions = store.add("text.positions", gaussian(&mut rng, config.max_len, d, 0.1), true);
        let text_trunk = EncoderTrunk::new(&mut store, &mut rng, "text", &config, true);

        let patch_dim = config.patch_size * config.patch_size;
        let patch_projection = Dense::new(
            &mut store,
            &mut rng,
            "audio.patch_projection",
            patch_dim,
            d,
            !config.train_patch_projection,
        );
        let audio_positions = store.add("audio.positions", gaussian(&mut rng, n_patches, d, 0.1), true);
        let audio_trunk = EncoderTrunk::new(&mut store, &mut rng, "audio", &config, false);

        let text_head = ProjectionHead::new(&mut store, &mut rng, "head.text", d, config.head_hidden, config.embed_dim);
        let audio_head = ProjectionHead::new(&mut store, &mut rng, "head.audio", d, config.head_hidden, config.embed_dim);
        let log_tau = store.add("log_tau", Array2::from_elem((1, 1), config.tau_init.ln()), false);

        Ok(Self {
            config,
            spec_shape,
            n_patches,
            vocab,
            store,
            token_embedding,
            text_positions,
            text_trunk,
            text_head,
            patch_projection,
            audio_positions,
            audio_trunk,
            audio_head,
            log_tau,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn vocab(&self) -> &BpeVocab {
        &self.vocab
    }

    pub fn spec_shape(&self) -> (usize, usize) {
        self.spec_shape
    }

    pub fn n_patches(&self) -> usize {
        self.n_patches
    }

    pub fn store(&self) -> &ParamStore {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    pub fn log_tau_id(&self) -> ParamId {
        self.log_tau
    }

    pub fn tau(&self) -> f64 {
        self.store.value(self.log_tau)[[0, 0]].exp()
    }

    /// Keep the temperature inside its allowed range.
    pub fn clamp_tau(&mut self) {
        let v = self.store.value_mut(self.log_tau);
        v[[0, 0]] = v[[0, 0]].clamp(TAU_MIN.ln(), TAU_MAX.ln());
    }

    pub fn lora_layers(&self) -> impl Iterator<Item = &LoraLinear> {
        self.text_trunk.lora_layers().chain(self.audio_trunk.lora_layers())
    }

    pub fn bind(&self, tape: &mut Tape) -> Bound {
        self.store.bind(tape)
    }

    fn check_tokens(&self, tokens: &[u32]) -> Result<()> {
        if tokens.is_empty() {
            return Err(ModelError::EmptyTokens);
        }
        if tokens.len() > self.config.max_len {
            return Err(ModelError::TooManyTokens {
                len: tokens.len(),
                max_len: self.config.max_len,
            });
        }
        if let Some(&bad) = tokens.iter().find(|&&t| t as usize >= self.vocab.vocab_size()) {
            return Err(ModelError::TokenOutOfRange(bad));
        }
        Ok(())
    }

    /// Final-layer token states, tokens x d_model, before pooling.
    pub fn text_states(&self, tape: &mut Tape, bound: &Bound, tokens: &[u32], use_lora: bool) -> Result<Var> {
        self.check_tokens(tokens)?;
        let table = self.store.value(self.token_embedding);
        let positions = self.store.value(self.text_positions);
        let d = self.config.d_model;
        let mut x = Array2::zeros((tokens.len(), d));
        for (i, &t) in tokens.iter().enumerate() {
            let mut row = x.row_mut(i);
            row.assign(&table.row(t as usize));
            row += &positions.row(i);
        }
        let x = tape.constant(x);
        Ok(self.text_trunk.forward(tape, bound, x, use_lora))
    }

    /// Text embedding (1 x D), read at the final ([EOS]) position.
    pub fn text_forward(&self, tape: &mut Tape, bound: &Bound, tokens: &[u32], use_lora: bool) -> Result<Var> {
        let states = self.text_states(tape, bound, tokens, use_lora)?;
        let pooled = tape.row(states, tokens.len() - 1);
        Ok(self.text_head.forward(tape, bound, pooled))
    }

    /// Audio embedding (1 x D) from N x (P * P) patches: linear patch
    /// projection, learned positions, bidirectional trunk, mean pooling.
    pub fn audio_forward(&self, tape: &mut Tape, bound: &Bound, patches: &Array2<f64>, use_lora: bool) -> Result<Var> {
        if patches.nrows() == 0 {
            return Err(ModelError::EmptyPatchSequence);
        }
        let patch_dim = self.config.patch_size * self.config.patch_size;
        if patches.ncols() != patch_dim || patches.nrows() > self.n_patches {
            return Err(ModelError::DimMismatch(format!(
                "patches {:?}, expected at most {} x {patch_dim}",
                patches.dim(),
                self.n_patches
            )));
        }
        let normalized = patches.mapv(|v| (v - INPUT_MEAN) / INPUT_STD);
        let x = tape.constant(normalized);
        let x = self.patch_projection.forward(tape, bound, x);
        let pos = self
            .store
            .value(self.audio_positions)
            .slice(s![..patches.nrows(), ..])
            .to_owned();
        let pos = tape.constant(pos);
        let x = tape.add(x, pos);
        let states = self.audio_trunk.forward(tape, bound, x, use_lora);
        let pooled = tape.mean_rows(states);
        Ok(self.audio_head.forward(tape, bound, pooled))
    }

    pub fn patches_of(&self, spectrogram: &Array2<f64>) -> Result<Array2<f64>> {
        if spectrogram.dim() != self.spec_shape {
            return Err(ModelError::DimMismatch(format!(
                "spectrogram {:?}, model expects {:?}",
                spectrogram.dim(),
                self.spec_shape
            )));
        }
        extract_patches(spectrogram, self.config.patch_size, self.config.patch_stride)
            .map(|p| p.patches)
            .map_err(|e| ModelError::DimMismatch(e.to_string()))
    }

    fn run(&self, f: impl FnOnce(&mut Tape, &Bound) -> Result<Var>) -> Result<Array1<f64>> {
        let mut tape = Tape::new();
        let bound = self.store.bind_frozen(&mut tape);
        let out = f(&mut tape, &bound)?;
        Ok(tape.value(out).row(0).to_owned())
    }

    pub fn embed_tokens(&self, tokens: &[u32]) -> Result<Array1<f64>> {
        self.run(|t, b| self.text_forward(t, b, tokens, true))
    }

    pub fn embed_text(&self, text: &str) -> Result<Array1<f64>> {
        self.embed_tokens(&self.vocab.encode(text))
    }

    pub fn embed_patches(&self, patches: &Array2<f64>) -> Result<Array1<f64>> {
        self.run(|t, b| self.audio_forward(t, b, patches, true))
    }

    pub fn embed_spectrogram(&self, spectrogram: &Array2<f64>) -> Result<Array1<f64>> {
        self.embed_patches(&self.patches_of(spectrogram)?)
    }

    /// Embeddings through the frozen trunks only (LoRA branches skipped).
    pub fn embed_tokens_frozen(&self, tokens: &[u32]) -> Result<Array1<f64>> {
        self.run(|t, b| self.text_forward(t, b, tokens, false))
    }

    pub fn embed_patches_frozen(&self, patches: &Array2<f64>) -> Result<Array1<f64>> {
        self.run(|t, b| self.audio_forward(t, b, patches, false))
    }

    /// Pre-pooling token states of the text trunk.
    pub fn text_hidden(&self, tokens: &[u32]) -> Result<Array2<f64>> {
        let mut tape = Tape::new();
        let bound = self.store.bind_frozen(&mut tape);
        let out = self.text_states(&mut tape, &bound, tokens, true)?;
        Ok(tape.value(out).clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::{log_mel, DspConfig};

    fn vocab() -> BpeVocab {
        BpeVocab::train(&["Cargo", "Tanker", "Tug", "A Cargo vessel at longitude"], 300, 77).unwrap()
    }

    fn small() -> DualEncoder {
        DualEncoder::new(ModelConfig::default(), vocab(), (128, 64), 3).unwrap()
    }

    fn tone_spec(freq: f64) -> Array2<f64> {
        let x: Vec<f64> = (0..32_000)
            .map(|n| (2.0 * std::f64::consts::PI * freq * n as f64 / 16_000.0).sin())
            .collect();
        log_mel(&x, 16_000, &DspConfig::toy()).unwrap().values
    }

    #[test]
    fn text_embedding_shape_and_determinism() {
        let m = small();
        let a = m.embed_text("Cargo").unwrap();
        assert_eq!(a.len(), 32);
        assert_eq!(a, m.embed_text("cargo").unwrap());
        assert_eq!(a, small().embed_text("Cargo").unwrap());
        assert!(a.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn text_errors() {
        let m = small();
        assert!(matches!(m.embed_tokens(&[]), Err(ModelError::EmptyTokens)));
        assert!(matches!(m.embed_tokens(&[400]), Err(ModelError::TokenOutOfRange(400))));
        assert!(matches!(m.embed_tokens(&[1; 78]), Err(ModelError::TooManyTokens { .. })));
    }

    #[test]
    fn causal_states_ignore_future_tokens() {
        let m = small();
        let a = m.vocab().encode("cargo vessel");
        let mut b = a.clone();
        let last = b.len() - 2;
        b[last] = 120;
        let (ha, hb) = (m.text_hidden(&a).unwrap(), m.text_hidden(&b).unwrap());
        for i in 0..last {
            assert_eq!(ha.row(i), hb.row(i), "position {i}");
        }
        assert_ne!(ha.row(last), hb.row(last));
    }

    #[test]
    fn audio_embeddings_separate_inputs() {
        let m = small();
        let zero = Array2::from_elem((128, 64), 1e-10f64.ln());
        let a = m.embed_spectrogram(&zero).unwrap();
        let b = m.embed_spectrogram(&tone_spec(1000.0)).unwrap();
        assert_eq!(a.len(), 32);
        assert_eq!(a, m.embed_spectrogram(&zero).unwrap());
        let dist = (&a - &b).mapv(|v| v * v).sum().sqrt();
        assert!(dist > 0.0);
        assert!(matches!(
            m.embed_patches(&Array2::zeros((0, 256))),
            Err(ModelError::EmptyPatchSequence)
        ));
    }

    #[test]
    fn zero_b_matches_frozen_trunk_exactly() {
        let m = small();
        let tokens = m.vocab().encode("a tanker vessel");
        assert_eq!(m.embed_tokens(&tokens).unwrap(), m.embed_tokens_frozen(&tokens).unwrap());
        let patches = m.patches_of(&tone_spec(500.0)).unwrap();
        assert_eq!(m.embed_patches(&patches).unwrap(), m.embed_patches_frozen(&patches).unwrap());
    }

    #[test]
    fn nonzero_b_changes_output() {
        let mut m = small();
        let ids: Vec<ParamId> = m.lora_layers().map(|l| l.b).collect();
        for id in ids {
            m.store_mut().value_mut(id).fill(0.05);
        }
        let tokens = m.vocab().encode("a tanker vessel");
        assert_ne!(m.embed_tokens(&tokens).unwrap(), m.embed_tokens_frozen(&tokens).unwrap());
    }

    #[test]
    fn trainable_fraction_at_desk_scale() {
        let v = BpeVocab::train(&["cargo"], 512, 77).unwrap();
        let m = DualEncoder::new(ModelConfig::default(), v, (1024, 64), 0).unwrap();
        let cfg = m.config();
        let adapters: usize = m.lora_layers().count() * cfg.lora_rank * (cfg.d_model + cfg.d_model);
        let head = 2 * (cfg.d_model * cfg.head_hidden + cfg.head_hidden + cfg.head_hidden * cfg.embed_dim + cfg.embed_dim);
        assert_eq!(m.store().trainable_count(), adapters + head + 1);
        let frac = m.store().trainable_count() as f64 / m.store().total_count() as f64;
        assert!(frac < 0.05, "{frac}");
    }

    #[test]
    fn tau_clamp() {
        let mut m = small();
        assert!((m.tau() - 0.07).abs() < 1e-12);
        let id = m.log_tau_id();
        m.store_mut().value_mut(id)[[0, 0]] = -50.0;
        m.clamp_tau();
        assert!((m.tau() - TAU_MIN).abs() < 1e-12);
    }

    #[test]
    fn checkpoint_round_trip() {
        let mut m = small();
        let id = m.lora_layers().next().unwrap().b;
        m.store_mut().value_mut(id).fill(0.25);
        let mut buf = Vec::new();
        super::super::save_checkpoint(&mut buf, &m, serde_json::json!({"k": 1})).unwrap();
        let (back, header) = super::super::load_checkpoint(buf.as_slice()).unwrap();
        assert_eq!(header.meta["k"], 1);
        for ((_, a), (_, b)) in m.store().iter().zip(back.store().iter()) {
            assert_eq!(a.name, b.name);
            assert_eq!(a.frozen, b.frozen);
            for (x, y) in a.value.iter().zip(b.value.iter()) {
                assert_eq!(f64::from(*x as f32), *y);
            }
        }
        assert_eq!(back.vocab().encode("cargo"), m.vocab().encode("cargo"));
        assert!(super::super::load_checkpoint(&buf[..20]).is_err());
    }
}
