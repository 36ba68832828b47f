use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{contrastive_loss_grad, cosine_lr, relative_error, AdamW, LossGrad, LossOptions, Result, TrainError};
use crate::autograd::{Gradients, Tape};
use crate::model::{DualEncoder, ParamId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    /// Stop after this many optimizer steps even if epochs remain.
    pub max_steps: Option<usize>,
    pub base_lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 16,
            epochs: 200,
            max_steps: None,
            base_lr: 1e-5,
            beta1: 0.99,
            beta2: 0.9,
            eps: 1e-8,
            weight_decay: 0.01,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size < 2 {
            return Err(TrainError::InvalidConfig("batch_size must be at least 2".into()));
        }
        if !(self.base_lr >= 0.0 && self.base_lr.is_finite()) {
            return Err(TrainError::InvalidConfig(format!("base_lr {}", self.base_lr)));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(TrainError::InvalidConfig(format!("{name} {b} outside [0, 1)")));
            }
        }
        Ok(())
    }

    fn steps_per_epoch(&self, n: usize) -> usize {
        let full = n / self.batch_size;
        let rest = n % self.batch_size;
        full + usize::from(rest >= 2)
    }

    pub fn total_steps(&self, n: usize) -> usize {
        let planned = self.steps_per_epoch(n) * self.epochs;
        self.max_steps.map_or(planned, |m| planned.min(m))
    }
}

/// One training pair: audio patches and caption tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub patches: Array2<f64>,
    pub tokens: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub steps: usize,
    pub mean_loss: f64,
    pub lr: f64,
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub steps: usize,
    pub epochs: Vec<EpochLog>,
    pub frozen_checksum: String,
}

fn forward(model: &DualEncoder, batch: &[&Example], want_grads: bool) -> Result<(LossGrad, Option<Gradients>)> {
    let mut tape = Tape::new();
    let bound = model.bind(&mut tape);
    let mut audio = Vec::with_capacity(batch.len());
    let mut text = Vec::with_capacity(batch.len());
    for ex in batch {
        audio.push(model.audio_forward(&mut tape, &bound, &ex.patches, true)?);
        text.push(model.text_forward(&mut tape, &bound, &ex.tokens, true)?);
    }
    let a = tape.stack_rows(&audio);
    let t = tape.stack_rows(&text);
    let log_tau = model.store().value(model.log_tau_id())[[0, 0]];
    let lg = contrastive_loss_grad(tape.value(a), tape.value(t), log_tau, LossOptions::default())?;
    if !want_grads {
        return Ok((lg, None));
    }
    let tau_var = bound.var(model.log_tau_id());
    let out = tape.custom_scalar(
        lg.loss,
        vec![
            (a, lg.d_audio.clone()),
            (t, lg.d_text.clone()),
            (tau_var, Array2::from_elem((1, 1), lg.d_log_tau)),
        ],
    );
    let grads = tape.backward(out);
    Ok((lg, Some(grads)))
}

pub fn batch_loss(model: &DualEncoder, batch: &[&Example]) -> Result<f64> {
    Ok(forward(model, batch, false)?.0.loss)
}

pub fn batch_loss_and_grads(model: &DualEncoder, batch: &[&Example]) -> Result<(f64, Vec<(ParamId, Array2<f64>)>)> {
    let (lg, grads) = forward(model, batch, true)?;
    let grads = grads
        .expect("gradients requested")
        .by_param
        .into_iter()
        .map(|(k, g)| (ParamId(k), g))
        .collect();
    Ok((lg.loss, grads))
}

/// Forward, backward and one optimizer update. Returns the pre-update loss.
pub fn backward_and_step(model: &mut DualEncoder, opt: &mut AdamW, batch: &[&Example], lr: f64) -> Result<f64> {
    let (loss, grads) = batch_loss_and_grads(model, batch)?;
    if !loss.is_finite() || grads.iter().any(|(_, g)| g.iter().any(|v| !v.is_finite())) {
        return Err(TrainError::NonFiniteLoss {
            step: opt.steps() as usize,
            detail: format!("loss {loss}"),
        });
    }
    opt.step(model.store_mut(), &grads, lr);
    model.clamp_tau();
    Ok(loss)
}

/// Compare tape gradients with central differences on up to
/// `per_tensor` random coordinates of every trainable tensor.
/// Returns the largest relative error.
pub fn check_model_gradients(
    model: &mut DualEncoder,
    batch: &[&Example],
    eps: f64,
    per_tensor: usize,
    seed: u64,
) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(TrainError::ZeroEpsilon);
    }
    let (_, grads) = batch_loss_and_grads(model, batch)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for (id, g) in &grads {
        let (rows, cols) = g.dim();
        for _ in 0..per_tensor.min(rows * cols) {
            let (r, c) = (rng.gen_range(0..rows), rng.gen_range(0..cols));
            let orig = model.store().value(*id)[[r, c]];
            model.store_mut().value_mut(*id)[[r, c]] = orig + eps;
            let up = batch_loss(model, batch);
            model.store_mut().value_mut(*id)[[r, c]] = orig - eps;
            let down = batch_loss(model, batch);
            model.store_mut().value_mut(*id)[[r, c]] = orig;
            let numeric = (up? - down?) / (2.0 * eps);
            worst = worst.max(relative_error(g[[r, c]], numeric));
        }
    }
    Ok(worst)
}

/// Train in place. Batches are drawn from a seeded shuffle each epoch; a
/// trailing batch of one example is dropped.
pub fn train(
    model: &mut DualEncoder,
    examples: &[Example],
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochLog),
) -> Result<TrainSummary> {
    config.validate()?;
    if examples.len() < 2 {
        return Err(TrainError::DegenerateBatch(examples.len()));
    }
    let checksum = model.store().frozen_checksum();
    let total = config.total_steps(examples.len());
    let mut opt = AdamW::new(config.beta1, config.beta2, config.eps, config.weight_decay);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut logs = Vec::new();
    let mut step = 0;
    'epochs: for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut losses = Vec::new();
        let mut lr = cosine_lr(config.base_lr, step, total);
        for chunk in order.chunks(config.batch_size) {
            if chunk.len() < 2 {
                continue;
            }
            if step >= total {
                break;
            }
            let batch: Vec<&Example> = chunk.iter().map(|&i| &examples[i]).collect();
            lr = cosine_lr(config.base_lr, step, total);
            losses.push(backward_and_step(model, &mut opt, &batch, lr)?);
            step += 1;
        }
        debug_assert_eq!(model.store().frozen_checksum(), checksum);
        if !losses.is_empty() {
            let log = EpochLog {
                epoch,
                steps: step,
                mean_loss: losses.iter().sum::<f64>() / losses.len() as f64,
                lr,
                tau: model.tau(),
            };
            on_epoch(&log);
            logs.push(log);
        }
        if step >= total {
            break 'epochs;
        }
    }
    let after = model.store().frozen_checksum();
    assert_eq!(after, checksum, "frozen parameters changed during training");
    Ok(TrainSummary {
        steps: step,
        epochs: logs,
        frozen_checksum: after,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BpeVocab, ModelConfig};

    fn tiny() -> (DualEncoder, Vec<Example>) {
        let config = ModelConfig {
            d_model: 16,
            n_heads: 2,
            n_layers: 1,
            ffn_dim: 32,
            embed_dim: 8,
            head_hidden: 8,
            lora_rank: 2,
            lora_alpha: 4.0,
            vocab_size: 300,
            max_len: 16,
            patch_size: 4,
            patch_stride: 4,
            ..ModelConfig::default()
        };
        let captions = ["a cargo ship", "a tanker", "a tug boat", "a fishing vessel"];
        let vocab = BpeVocab::train(&captions, 300, 16).unwrap();
        let model = DualEncoder::new(config, vocab.clone(), (8, 8), 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let examples = captions
            .iter()
            .map(|c| {
                let spec = Array2::from_shape_fn((8, 8), |_| rng.gen_range(-8.0..0.0));
                Example {
                    patches: model.patches_of(&spec).unwrap(),
                    tokens: vocab.encode(c),
                }
            })
            .collect();
        (model, examples)
    }

    #[test]
    fn gradients_match_finite_differences() {
        let (mut model, examples) = tiny();
        // nonzero B so every LoRA factor carries gradient
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ids: Vec<ParamId> = model.store().trainable();
        for id in ids {
            let v = model.store_mut().value_mut(id);
            v.mapv_inplace(|x| x + rng.gen_range(-0.1..0.1));
        }
        let batch: Vec<&Example> = examples.iter().collect();
        let err = check_model_gradients(&mut model, &batch, 1e-5, 6, 2).unwrap();
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn training_lowers_loss_and_keeps_frozen() {
        let (mut model, examples) = tiny();
        let batch: Vec<&Example> = examples.iter().collect();
        let before = batch_loss(&model, &batch).unwrap();
        let cfg = TrainConfig {
            batch_size: 4,
            epochs: 60,
            base_lr: 1e-2,
            ..TrainConfig::default()
        };
        let summary = train(&mut model, &examples, &cfg, |_| {}).unwrap();
        assert_eq!(summary.steps, 60);
        let after = batch_loss(&model, &batch).unwrap();
        assert!(after < before * 0.5, "{before} -> {after}");
    }

    #[test]
    fn zero_lr_is_identity() {
        let (mut model, examples) = tiny();
        let before = model.store().clone();
        let cfg = TrainConfig {
            batch_size: 2,
            epochs: 2,
            base_lr: 0.0,
            ..TrainConfig::default()
        };
        train(&mut model, &examples, &cfg, |_| {}).unwrap();
        assert_eq!(model.store(), &before);
    }

    #[test]
    fn deterministic() {
        let cfg = TrainConfig {
            batch_size: 3,
            epochs: 3,
            base_lr: 1e-3,
            seed: 5,
            ..TrainConfig::default()
        };
        let (mut m1, ex) = tiny();
        let (mut m2, _) = tiny();
        train(&mut m1, &ex, &cfg, |_| {}).unwrap();
        train(&mut m2, &ex, &cfg, |_| {}).unwrap();
        assert_eq!(m1.store(), m2.store());
    }

    #[test]
    fn rejects_tiny_batches() {
        let (mut model, examples) = tiny();
        let cfg = TrainConfig {
            batch_size: 1,
            ..TrainConfig::default()
        };
        assert!(matches!(train(&mut model, &examples, &cfg, |_| {}), Err(TrainError::InvalidConfig(_))));
        assert!(matches!(
            train(&mut model, &examples[..1], &TrainConfig::default(), |_| {}),
            Err(TrainError::DegenerateBatch(1))
        ));
    }
}
