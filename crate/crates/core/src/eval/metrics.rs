use ndarray::{Array1, Array2, ArrayView1};

use super::{EvalError, Result};

pub fn cosine_similarity(a: ArrayView1<f64>, b: ArrayView1<f64>) -> Result<f64> {
    if a.len() != b.len() {
        return Err(EvalError::DimMismatch(format!("{} vs {}", a.len(), b.len())));
    }
    let na = a.dot(&a).sqrt();
    let nb = b.dot(&b).sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(EvalError::ZeroVector);
    }
    Ok((a.dot(&b) / (na * nb)).clamp(-1.0, 1.0))
}

/// Queries x targets scores with the index of each query's correct target.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    pub scores: Array2<f64>,
    pub query_ids: Vec<String>,
    pub target_ids: Vec<String>,
    pub truth: Vec<Option<usize>>,
}

impl SimilarityMatrix {
    /// Cosine scores between every query and target embedding.
    pub fn from_embeddings(
        queries: &[Array1<f64>],
        targets: &[Array1<f64>],
        query_ids: Vec<String>,
        target_ids: Vec<String>,
        truth: Vec<Option<usize>>,
    ) -> Result<Self> {
        let mut scores = Array2::zeros((queries.len(), targets.len()));
        for (i, q) in queries.iter().enumerate() {
            for (j, t) in targets.iter().enumerate() {
                scores[[i, j]] = cosine_similarity(q.view(), t.view())?;
            }
        }
        Ok(Self {
            scores,
            query_ids,
            target_ids,
            truth,
        })
    }

    fn check(&self) -> Result<()> {
        let (q, t) = self.scores.dim();
        if self.truth.len() != q {
            return Err(EvalError::DimMismatch(format!("{} truths for {q} queries", self.truth.len())));
        }
        match self.truth.iter().position(|g| !matches!(g, Some(j) if *j < t)) {
            Some(i) => Err(EvalError::MissingGroundTruth(i)),
            None => Ok(()),
        }
    }
}

/// 1-based rank of `target` in `scores` with ties resolved against it.
pub fn pessimistic_rank(scores: ArrayView1<f64>, target: usize) -> usize {
    let s = scores[target];
    1 + scores
        .iter()
        .enumerate()
        .filter(|&(j, &v)| j != target && v >= s)
        .count()
}

/// Percentage of queries whose correct target ranks within each `k`.
pub fn recall_at_k(sim: &SimilarityMatrix, ks: &[usize]) -> Result<Vec<f64>> {
    sim.check()?;
    let n = sim.scores.nrows();
    if n == 0 {
        return Ok(vec![0.0; ks.len()]);
    }
    let ranks: Vec<usize> = sim
        .scores
        .rows()
        .into_iter()
        .zip(&sim.truth)
        .map(|(row, t)| pessimistic_rank(row, t.expect("checked")))
        .collect();
    Ok(ks
        .iter()
        .map(|&k| 100.0 * ranks.iter().filter(|&&r| r <= k).count() as f64 / n as f64)
        .collect())
}

/// Index of the prompt nearest to `audio` by cosine; the lowest index wins ties.
pub fn zero_shot_classify(audio: ArrayView1<f64>, prompts: &[Array1<f64>]) -> Result<usize> {
    if prompts.is_empty() {
        return Err(EvalError::EmptyPromptSet);
    }
    let mut best = (0, f64::NEG_INFINITY);
    for (i, p) in prompts.iter().enumerate() {
        let s = cosine_similarity(audio, p.view())?;
        if s > best.1 {
            best = (i, s);
        }
    }
    Ok(best.0)
}
