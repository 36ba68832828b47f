//! Reverse-mode differentiation over dense f64 matrices.
//!
//! A [`Tape`] records every operation of one forward pass. Leaves are
//! either constants or handles to trainable parameters; [`Tape::backward`]
//! returns gradients for the trainable leaves only.

use ndarray::{concatenate, s, Array2, Axis};

pub type Mat = Array2<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    /// `a . b^T`
    MatMulT(Var, Var),
    Add(Var, Var),
    /// Add a 1 x m row to every row.
    AddRow(Var, Var),
    Scale(Var, f64),
    Relu(Var),
    /// Row-wise standardization; caches 1 / sigma per row.
    LayerNorm(Var, Vec<f64>),
    /// Row softmax, optionally with a causal (lower-triangular) mask.
    Softmax(Var),
    SliceCols(Var, usize),
    ConcatCols(Vec<Var>),
    MeanRows(Var),
    Row(Var, usize),
    StackRows(Vec<Var>),
    /// Scalar computed outside the tape with precomputed input gradients.
    Custom(Vec<(Var, Mat)>),
}

#[derive(Debug)]
struct Node {
    value: Mat,
    op: Op,
    needs_grad: bool,
    param: Option<usize>,
}

#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients of trainable leaves, indexed by the caller's parameter key.
#[derive(Debug, Default, Clone)]
pub struct Gradients {
    pub by_param: Vec<(usize, Mat)>,
}

impl Gradients {
    pub fn get(&self, key: usize) -> Option<&Mat> {
        self.by_param.iter().find(|(k, _)| *k == key).map(|(_, g)| g)
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, value: Mat, op: Op, needs_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
            param: None,
        });
        Var(self.nodes.len() - 1)
    }

    fn ng(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    pub fn value(&self, v: Var) -> &Mat {
        &self.nodes[v.0].value
    }

    pub fn scalar(&self, v: Var) -> f64 {
        self.nodes[v.0].value[[0, 0]]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn constant(&mut self, value: Mat) -> Var {
        self.push(value, Op::Leaf, false)
    }

    /// Trainable leaf; its gradient is reported under `key`.
    pub fn param(&mut self, key: usize, value: Mat) -> Var {
        let v = self.push(value, Op::Leaf, true);
        self.nodes[v.0].param = Some(key);
        v
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let value = self.value(a).dot(self.value(b));
        let ng = self.ng(a) || self.ng(b);
        self.push(value, Op::MatMul(a, b), ng)
    }

    pub fn matmul_t(&mut self, a: Var, b: Var) -> Var {
        let value = self.value(a).dot(&self.value(b).t());
        let ng = self.ng(a) || self.ng(b);
        self.push(value, Op::MatMulT(a, b), ng)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let value = self.value(a) + self.value(b);
        let ng = self.ng(a) || self.ng(b);
        self.push(value, Op::Add(a, b), ng)
    }

    pub fn add_row(&mut self, a: Var, row: Var) -> Var {
        assert_eq!(self.value(row).nrows(), 1, "add_row expects a 1 x m row");
        let value = self.value(a) + self.value(row);
        let ng = self.ng(a) || self.ng(row);
        self.push(value, Op::AddRow(a, row), ng)
    }

    pub fn scale(&mut self, a: Var, k: f64) -> Var {
        let value = self.value(a) * k;
        let ng = self.ng(a);
        self.push(value, Op::Scale(a, k), ng)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let value = self.value(a).mapv(|x| x.max(0.0));
        let ng = self.ng(a);
        self.push(value, Op::Relu(a), ng)
    }

    pub fn layer_norm(&mut self, a: Var, eps: f64) -> Var {
        let x = self.value(a);
        let mut out = x.clone();
        let mut inv = Vec::with_capacity(x.nrows());
        for mut row in out.rows_mut() {
            let n = row.len() as f64;
            let mean = row.sum() / n;
            let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            let r = 1.0 / (var + eps).sqrt();
            row.mapv_inplace(|v| (v - mean) * r);
            inv.push(r);
        }
        let ng = self.ng(a);
        self.push(out, Op::LayerNorm(a, inv), ng)
    }

    /// Row softmax. With `causal`, entry (i, j) for j > i is masked out.
    pub fn softmax(&mut self, a: Var, causal: bool) -> Var {
        let x = self.value(a);
        let mut out = Array2::zeros(x.dim());
        for (i, (row, mut dst)) in x.rows().into_iter().zip(out.rows_mut()).enumerate() {
            let width = if causal { (i + 1).min(row.len()) } else { row.len() };
            let max = row.iter().take(width).fold(f64::NEG_INFINITY, |m, &v| m.max(v));
            let mut sum = 0.0;
            for j in 0..width {
                let e = (row[j] - max).exp();
                dst[j] = e;
                sum += e;
            }
            for j in 0..width {
                dst[j] /= sum;
            }
        }
        let ng = self.ng(a);
        self.push(out, Op::Softmax(a), ng)
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, len: usize) -> Var {
        let value = self.value(a).slice(s![.., start..start + len]).to_owned();
        let ng = self.ng(a);
        self.push(value, Op::SliceCols(a, start), ng)
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        let views: Vec<_> = parts.iter().map(|&p| self.value(p).view()).collect();
        let value = concatenate(Axis(1), &views).expect("equal row counts");
        let ng = parts.iter().any(|&p| self.ng(p));
        self.push(value, Op::ConcatCols(parts.to_vec()), ng)
    }

    pub fn mean_rows(&mut self, a: Var) -> Var {
        let value = self
            .value(a)
            .mean_axis(Axis(0))
            .expect("non-empty")
            .insert_axis(Axis(0));
        let ng = self.ng(a);
        self.push(value, Op::MeanRows(a), ng)
    }

    pub fn row(&mut self, a: Var, index: usize) -> Var {
        let value = self.value(a).slice(s![index..index + 1, ..]).to_owned();
        let ng = self.ng(a);
        self.push(value, Op::Row(a, index), ng)
    }

    pub fn stack_rows(&mut self, rows: &[Var]) -> Var {
        let views: Vec<_> = rows.iter().map(|&r| self.value(r).view()).collect();
        let value = concatenate(Axis(0), &views).expect("equal widths");
        let ng = rows.iter().any(|&r| self.ng(r));
        self.push(value, Op::StackRows(rows.to_vec()), ng)
    }

    /// Record a scalar whose gradients with respect to `inputs` were
    /// computed analytically by the caller.
    pub fn custom_scalar(&mut self, value: f64, inputs: Vec<(Var, Mat)>) -> Var {
        for (v, g) in &inputs {
            assert_eq!(self.value(*v).dim(), g.dim(), "custom gradient shape");
        }
        let ng = inputs.iter().any(|(v, _)| self.ng(*v));
        self.push(Array2::from_elem((1, 1), value), Op::Custom(inputs), ng)
    }

    /// Back-propagate from a 1 x 1 output.
    pub fn backward(&self, output: Var) -> Gradients {
        assert_eq!(self.value(output).dim(), (1, 1), "backward from a scalar");
        let mut grads: Vec<Option<Mat>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[output.0] = Some(Array2::ones((1, 1)));

        fn acc(grads: &mut [Option<Mat>], v: Var, g: Mat) {
            match &mut grads[v.0] {
                Some(existing) => *existing += &g,
                slot @ None => *slot = Some(g),
            }
        }

        for idx in (0..=output.0).rev() {
            let node = &self.nodes[idx];
            if !node.needs_grad {
                continue;
            }
            let Some(g) = grads[idx].take() else { continue };
            match &node.op {
                Op::Leaf => {
                    grads[idx] = Some(g);
                }
                Op::MatMul(a, b) => {
                    if self.ng(*a) {
                        acc(&mut grads, *a, g.dot(&self.value(*b).t()));
                    }
                    if self.ng(*b) {
                        acc(&mut grads, *b, self.value(*a).t().dot(&g));
                    }
                }
                Op::MatMulT(a, b) => {
                    if self.ng(*a) {
                        acc(&mut grads, *a, g.dot(self.value(*b)));
                    }
                    if self.ng(*b) {
                        acc(&mut grads, *b, g.t().dot(self.value(*a)));
                    }
                }
                Op::Add(a, b) => {
                    if self.ng(*b) {
                        acc(&mut grads, *b, g.clone());
                    }
                    if self.ng(*a) {
                        acc(&mut grads, *a, g);
                    }
                }
                Op::AddRow(a, row) => {
                    if self.ng(*row) {
                        acc(&mut grads, *row, g.sum_axis(Axis(0)).insert_axis(Axis(0)));
                    }
                    if self.ng(*a) {
                        acc(&mut grads, *a, g);
                    }
                }
                Op::Scale(a, k) => acc(&mut grads, *a, g * *k),
                Op::Relu(a) => {
                    let mut d = g;
                    d.zip_mut_with(self.value(*a), |d, &x| {
                        if x <= 0.0 {
                            *d = 0.0;
                        }
                    });
                    acc(&mut grads, *a, d);
                }
                Op::LayerNorm(a, inv) => {
                    let y = &node.value;
                    let mut d = Array2::zeros(g.dim());
                    for (i, mut drow) in d.rows_mut().into_iter().enumerate() {
                        let (grow, yrow) = (g.row(i), y.row(i));
                        let n = grow.len() as f64;
                        let mean_g = grow.sum() / n;
                        let mean_gy = grow.dot(&yrow) / n;
                        for j in 0..drow.len() {
                            drow[j] = inv[i] * (grow[j] - mean_g - yrow[j] * mean_gy);
                        }
                    }
                    acc(&mut grads, *a, d);
                }
                Op::Softmax(a) => {
                    let p = &node.value;
                    let mut d = Array2::zeros(g.dim());
                    for (i, mut drow) in d.rows_mut().into_iter().enumerate() {
                        let (grow, prow) = (g.row(i), p.row(i));
                        let dot = grow.dot(&prow);
                        for j in 0..drow.len() {
                            drow[j] = prow[j] * (grow[j] - dot);
                        }
                    }
                    acc(&mut grads, *a, d);
                }
                Op::SliceCols(a, start) => {
                    let mut d = Array2::zeros(self.value(*a).dim());
                    d.slice_mut(s![.., *start..*start + g.ncols()]).assign(&g);
                    acc(&mut grads, *a, d);
                }
                Op::ConcatCols(parts) => {
                    let mut offset = 0;
                    for &p in parts {
                        let w = self.value(p).ncols();
                        if self.ng(p) {
                            acc(&mut grads, p, g.slice(s![.., offset..offset + w]).to_owned());
                        }
                        offset += w;
                    }
                }
                Op::MeanRows(a) => {
                    let n = self.value(*a).nrows();
                    let d = g.broadcast(self.value(*a).dim()).expect("row broadcast").to_owned() / n as f64;
                    acc(&mut grads, *a, d);
                }
                Op::Row(a, index) => {
                    let mut d = Array2::zeros(self.value(*a).dim());
                    d.row_mut(*index).assign(&g.row(0));
                    acc(&mut grads, *a, d);
                }
                Op::StackRows(rows) => {
                    for (i, &r) in rows.iter().enumerate() {
                        if self.ng(r) {
                            acc(&mut grads, r, g.slice(s![i..i + 1, ..]).to_owned());
                        }
                    }
                }
                Op::Custom(inputs) => {
                    let k = g[[0, 0]];
                    for (v, local) in inputs {
                        if self.ng(*v) {
                            acc(&mut grads, *v, local * k);
                        }
                    }
                }
            }
        }

        let mut out = Gradients::default();
        for (idx, node) in self.nodes.iter().enumerate() {
            if let (Some(key), Some(g)) = (node.param, grads[idx].take()) {
                out.by_param.push((key, g));
            }
        }
        out
    }
}
