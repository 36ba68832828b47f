use std::collections::BTreeMap;

use ndarray::Array2;

use crate::model::{ParamId, ParamStore};

/// AdamW with decoupled weight decay applied to matrix-shaped parameters
/// only (biases and the temperature are not decayed).
#[derive(Debug, Clone)]
pub struct AdamW {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    step: u64,
    moments: BTreeMap<ParamId, (Array2<f64>, Array2<f64>)>,
}

impl AdamW {
    pub fn new(beta1: f64, beta2: f64, eps: f64, weight_decay: f64) -> Self {
        Self {
            beta1,
            beta2,
            eps,
            weight_decay,
            step: 0,
            moments: BTreeMap::new(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Apply one update. Gradients for frozen parameters are ignored.
    pub fn step(&mut self, store: &mut ParamStore, grads: &[(ParamId, Array2<f64>)], lr: f64) {
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for (id, g) in grads {
            if store.get(*id).frozen {
                continue;
            }
            let (m, v) = self
                .moments
                .entry(*id)
                .or_insert_with(|| (Array2::zeros(g.dim()), Array2::zeros(g.dim())));
            m.zip_mut_with(g, |m, &g| *m = self.beta1 * *m + (1.0 - self.beta1) * g);
            v.zip_mut_with(g, |v, &g| *v = self.beta2 * *v + (1.0 - self.beta2) * g * g);
            let value = store.value_mut(*id);
            let decay = if value.nrows() > 1 && value.ncols() > 1 {
                self.weight_decay
            } else {
                0.0
            };
            ndarray::Zip::from(value).and(&*m).and(&*v).for_each(|p, &m, &v| {
                let update = (m / c1) / ((v / c2).sqrt() + self.eps) + decay * *p;
                *p -= lr * update;
            });
        }
    }
}
