use ndarray::{Array1, Array2};

use super::{ModelError, Result};

/// Low-rank update `(alpha / r) B A` for a frozen `d x k` weight.
#[derive(Debug, Clone, PartialEq)]
pub struct LoraAdapter {
    /// r x k
    pub a: Array2<f64>,
    /// d x r
    pub b: Array2<f64>,
    pub alpha: f64,
}

impl LoraAdapter {
    pub fn new(a: Array2<f64>, b: Array2<f64>, alpha: f64) -> Result<Self> {
        let (r, k) = a.dim();
        let (d, rb) = b.dim();
        if r != rb {
            return Err(ModelError::DimMismatch(format!("A is {r}x{k}, B is {d}x{rb}")));
        }
        let limit = d.min(k) / 2;
        if r == 0 || r > limit {
            return Err(ModelError::RankTooLarge { rank: r, limit });
        }
        Ok(Self { a, b, alpha })
    }

    pub fn rank(&self) -> usize {
        self.a.nrows()
    }

    pub fn scale(&self) -> f64 {
        self.alpha / self.rank() as f64
    }

    /// `(alpha / r) B A`.
    pub fn delta(&self) -> Array2<f64> {
        self.b.dot(&self.a) * self.scale()
    }

    pub fn merged(&self, w0: &Array2<f64>) -> Array2<f64> {
        w0 + &self.delta()
    }
}

/// `y = W0 x + (alpha / r) B (A x)`.
pub fn lora_dense(x: &Array1<f64>, w0: &Array2<f64>, adapter: &LoraAdapter) -> Result<Array1<f64>> {
    let (d, k) = w0.dim();
    if x.len() != k || adapter.a.ncols() != k || adapter.b.nrows() != d {
        return Err(ModelError::DimMismatch(format!(
            "x: {}, W0: {d}x{k}, A: {:?}, B: {:?}",
            x.len(),
            adapter.a.dim(),
            adapter.b.dim()
        )));
    }
    let low = adapter.a.dot(x);
    Ok(w0.dot(x) + adapter.b.dot(&low) * adapter.scale())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn zero_b_is_identity_on_base() {
        let w0 = array![[1.0, 2.0, 0.5, -1.0], [0.3, -0.7, 1.1, 0.0], [2.0, 0.1, 0.2, 0.4], [0.0, 1.0, 1.0, 1.0]];
        let a = array![[0.2, 0.4, -0.1, 0.9], [1.0, -1.0, 0.5, 0.3]];
        let ad = LoraAdapter::new(a, Array2::zeros((4, 2)), 8.0).unwrap();
        let x = array![0.5, -1.5, 2.0, 0.25];
        assert_eq!(lora_dense(&x, &w0, &ad).unwrap(), w0.dot(&x));
    }

    #[test]
    fn worked_example() {
        let ad = LoraAdapter::new(array![[1.0, 0.0]], array![[1.0], [0.0]], 1.0).unwrap();
        let y = lora_dense(&array![1.0, 1.0], &Array2::eye(2), &ad).unwrap();
        assert_eq!(y, array![2.0, 1.0]);
    }

    #[test]
    fn rank_limit() {
        let err = LoraAdapter::new(Array2::zeros((2, 2)), Array2::zeros((2, 2)), 1.0);
        assert!(matches!(err, Err(ModelError::RankTooLarge { rank: 2, limit: 1 })));
    }

    #[test]
    fn dim_mismatch() {
        let ad = LoraAdapter::new(array![[1.0, 0.0]], array![[1.0], [0.0]], 1.0).unwrap();
        assert!(matches!(
            lora_dense(&array![1.0, 1.0, 1.0], &Array2::eye(2), &ad),
            Err(ModelError::DimMismatch(_))
        ));
    }
}
