use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::params::{Bound, ParamId, ParamStore};
use crate::autograd::{Tape, Var};

const LN_EPS: f64 = 1e-5;

pub(crate) fn gaussian<R: Rng>(rng: &mut R, rows: usize, cols: usize, std: f64) -> Array2<f64> {
    let normal = Normal::new(0.0, std).expect("positive std");
    Array2::from_shape_simple_fn((rows, cols), || normal.sample(rng))
}

/// `y = x W^T + b` with W stored `out x in`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dense {
    pub w: ParamId,
    pub b: ParamId,
}

impl Dense {
    pub fn new<R: Rng>(
        store: &mut ParamStore,
        rng: &mut R,
        name: &str,
        d_in: usize,
        d_out: usize,
        frozen: bool,
    ) -> Self {
        let w = gaussian(rng, d_out, d_in, (1.0 / d_in as f64).sqrt());
        Self {
            w: store.add(format!("{name}.w"), w, frozen),
            b: store.add(format!("{name}.b"), Array2::zeros((1, d_out)), frozen),
        }
    }

    pub fn forward(&self, tape: &mut Tape, bound: &Bound, x: Var) -> Var {
        let y = tape.matmul_t(x, bound.var(self.w));
        tape.add_row(y, bound.var(self.b))
    }
}

/// Frozen dense layer plus a trainable low-rank branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoraLinear {
    pub base: Dense,
    /// r x in
    pub a: ParamId,
    /// out x r
    pub b: ParamId,
    pub scale: f64,
}

impl LoraLinear {
    #[allow(clippy::too_many_arguments)]
    pub fn new<R: Rng>(
        store: &mut ParamStore,
        rng: &mut R,
        name: &str,
        d_in: usize,
        d_out: usize,
        rank: usize,
        alpha: f64,
    ) -> Self {
        let base = Dense::new(store, rng, name, d_in, d_out, true);
        let a = gaussian(rng, rank, d_in, (1.0 / d_in as f64).sqrt());
        Self {
            base,
            a: store.add(format!("{name}.lora_a"), a, false),
            b: store.add(format!("{name}.lora_b"), Array2::zeros((d_out, rank)), false),
            scale: alpha / rank as f64,
        }
    }

    /// With `use_lora == false` only the frozen path runs.
    pub fn forward(&self, tape: &mut Tape, bound: &Bound, x: Var, use_lora: bool) -> Var {
        let y = tape.matmul_t(x, bound.var(self.base.w));
        let y = if use_lora {
            let low = tape.matmul_t(x, bound.var(self.a));
            let up = tape.matmul_t(low, bound.var(self.b));
            let up = tape.scale(up, self.scale);
            tape.add(y, up)
        } else {
            y
        };
        tape.add_row(y, bound.var(self.base.b))
    }

    /// `W0 + (alpha / r) B A`.
    pub fn merged_weight(&self, store: &ParamStore) -> Array2<f64> {
        store.value(self.base.w) + &(store.value(self.b).dot(store.value(self.a)) * self.scale)
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Block {
    query: LoraLinear,
    key: Dense,
    value: LoraLinear,
    out: Dense,
    ff_in: Dense,
    ff_out: Dense,
}

/// Pre-norm transformer encoder. Dense weights are frozen; LoRA sits on the
/// query and value projections.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderTrunk {
    blocks: Vec<Block>,
    n_heads: usize,
    causal: bool,
}

impl EncoderTrunk {
    #[allow(clippy::too_many_arguments)]
    pub fn new<R: Rng>(
        store: &mut ParamStore,
        rng: &mut R,
        name: &str,
        config: &super::ModelConfig,
        causal: bool,
    ) -> Self {
        let d = config.d_model;
        let blocks = (0..config.n_layers)
            .map(|l| {
                let p = format!("{name}.block{l}");
                Block {
                    query: LoraLinear::new(store, rng, &format!("{p}.attn.q"), d, d, config.lora_rank, config.lora_alpha),
                    key: Dense::new(store, rng, &format!("{p}.attn.k"), d, d, true),
                    value: LoraLinear::new(store, rng, &format!("{p}.attn.v"), d, d, config.lora_rank, config.lora_alpha),
                    out: Dense::new(store, rng, &format!("{p}.attn.o"), d, d, true),
                    ff_in: Dense::new(store, rng, &format!("{p}.ff.in"), d, config.ffn_dim, true),
                    ff_out: Dense::new(store, rng, &format!("{p}.ff.out"), config.ffn_dim, d, true),
                }
            })
            .collect();
        Self {
            blocks,
            n_heads: config.n_heads,
            causal,
        }
    }

    pub fn is_causal(&self) -> bool {
        self.causal
    }

    pub fn lora_layers(&self) -> impl Iterator<Item = &LoraLinear> {
        self.blocks.iter().flat_map(|b| [&b.query, &b.value])
    }

    /// Tokens x d_model in, tokens x d_model out (final layer norm applied).
    pub fn forward(&self, tape: &mut Tape, bound: &Bound, mut x: Var, use_lora: bool) -> Var {
        for block in &self.blocks {
            let h = tape.layer_norm(x, LN_EPS);
            let q = block.query.forward(tape, bound, h, use_lora);
            let k = block.key.forward(tape, bound, h);
            let v = block.value.forward(tape, bound, h, use_lora);
            let d = tape.value(q).ncols();
            let dh = d / self.n_heads;
            let scale = 1.0 / (dh as f64).sqrt();
            let heads: Vec<Var> = (0..self.n_heads)
                .map(|i| {
                    let qh = tape.slice_cols(q, i * dh, dh);
                    let kh = tape.slice_cols(k, i * dh, dh);
                    let vh = tape.slice_cols(v, i * dh, dh);
                    let scores = tape.matmul_t(qh, kh);
                    let scores = tape.scale(scores, scale);
                    let p = tape.softmax(scores, self.causal);
                    tape.matmul(p, vh)
                })
                .collect();
            let attn = if heads.len() == 1 { heads[0] } else { tape.concat_cols(&heads) };
            let attn = block.out.forward(tape, bound, attn);
            x = tape.add(x, attn);

            let h = tape.layer_norm(x, LN_EPS);
            let f = block.ff_in.forward(tape, bound, h);
            let f = tape.relu(f);
            let f = block.ff_out.forward(tape, bound, f);
            x = tape.add(x, f);
        }
        tape.layer_norm(x, LN_EPS)
    }
}

/// Two dense layers with a ReLU between them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionHead {
    pub hidden: Dense,
    pub out: Dense,
}

impl ProjectionHead {
    pub fn new<R: Rng>(
        store: &mut ParamStore,
        rng: &mut R,
        name: &str,
        d_in: usize,
        hidden: usize,
        d_out: usize,
    ) -> Self {
        Self {
            hidden: Dense::new(store, rng, &format!("{name}.fc1"), d_in, hidden, false),
            out: Dense::new(store, rng, &format!("{name}.fc2"), hidden, d_out, false),
        }
    }

    pub fn forward(&self, tape: &mut Tape, bound: &Bound, x: Var) -> Var {
        let h = self.hidden.forward(tape, bound, x);
        let h = tape.relu(h);
        self.out.forward(tape, bound, h)
    }
}
