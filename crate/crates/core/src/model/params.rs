use ndarray::Array2;
use sha2::{Digest, Sha256};

use crate::autograd::{Mat, Tape, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub usize);

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub value: Mat,
    pub frozen: bool,
}

/// Named tensors of a model, in creation order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore {
    params: Vec<Param>,
}

/// Tape handles for every parameter of a store.
#[derive(Debug, Clone)]
pub struct Bound {
    vars: Vec<Var>,
}

impl Bound {
    pub fn var(&self, id: ParamId) -> Var {
        self.vars[id.0]
    }
}

impl ParamStore {
    pub fn add(&mut self, name: impl Into<String>, value: Mat, frozen: bool) -> ParamId {
        let name = name.into();
        debug_assert!(self.find(&name).is_none(), "duplicate parameter {name}");
        self.params.push(Param {
            name,
            value,
            frozen,
        });
        ParamId(self.params.len() - 1)
    }

    pub fn get(&self, id: ParamId) -> &Param {
        &self.params[id.0]
    }

    pub fn value(&self, id: ParamId) -> &Mat {
        &self.params[id.0].value
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Mat {
        &mut self.params[id.0].value
    }

    pub fn set_frozen(&mut self, id: ParamId, frozen: bool) {
        self.params[id.0].frozen = frozen;
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.params.iter().position(|p| p.name == name).map(ParamId)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Param)> {
        self.params.iter().enumerate().map(|(i, p)| (ParamId(i), p))
    }

    pub fn trainable(&self) -> Vec<ParamId> {
        self.iter().filter(|(_, p)| !p.frozen).map(|(id, _)| id).collect()
    }

    pub fn trainable_count(&self) -> usize {
        self.params.iter().filter(|p| !p.frozen).map(|p| p.value.len()).sum()
    }

    pub fn total_count(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    /// SHA-256 over names and exact bit patterns of every frozen tensor.
    pub fn frozen_checksum(&self) -> String {
        let mut h = Sha256::new();
        for p in self.params.iter().filter(|p| p.frozen) {
            h.update(p.name.as_bytes());
            for v in p.value.iter() {
                h.update(v.to_bits().to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }

    /// Put every parameter on the tape: trainable ones as gradient leaves,
    /// frozen ones as constants.
    pub fn bind(&self, tape: &mut Tape) -> Bound {
        let vars = self
            .params
            .iter()
            .enumerate()
            .map(|(i, p)| {
                if p.frozen {
                    tape.constant(p.value.clone())
                } else {
                    tape.param(i, p.value.clone())
                }
            })
            .collect();
        Bound { vars }
    }

    /// Put every parameter on the tape as a constant (inference).
    pub fn bind_frozen(&self, tape: &mut Tape) -> Bound {
        let vars = self.params.iter().map(|p| tape.constant(p.value.clone())).collect();
        Bound { vars }
    }

    pub fn zeros_like(&self, id: ParamId) -> Mat {
        Array2::zeros(self.params[id.0].value.dim())
    }
}
