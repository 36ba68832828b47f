use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{recall_at_k, zero_shot_classify, EvalError, Result, SimilarityMatrix};
use crate::model::DualEncoder;

pub const RECALL_KS: [usize; 3] = [1, 3, 5];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    Supervised,
    ZeroShot,
    Retrieval,
}

impl FromStr for EvalMode {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "supervised" => Ok(Self::Supervised),
            "zeroshot" | "zero_shot" | "zero-shot" => Ok(Self::ZeroShot),
            "retrieval" => Ok(Self::Retrieval),
            other => Err(EvalError::UnknownMode(other.to_string())),
        }
    }
}

impl fmt::Display for EvalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Supervised => "supervised",
            Self::ZeroShot => "zero_shot",
            Self::Retrieval => "retrieval",
        })
    }
}

/// Prompts ranked for each audio query: the full taxonomy query list, or
/// only the queries naming a category present in the test set.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptSet {
    #[default]
    Taxonomy,
    LabelSpace,
}

impl FromStr for PromptSet {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "taxonomy" => Ok(Self::Taxonomy),
            "label_space" | "label-space" | "labels" => Ok(Self::LabelSpace),
            other => Err(EvalError::UnknownPromptSet(other.to_string())),
        }
    }
}

impl PromptSet {
    /// Select prompts from `queries`, keeping their order.
    pub fn select(self, queries: &[String], items: &[EvalItem]) -> Vec<String> {
        match self {
            Self::Taxonomy => queries.to_vec(),
            Self::LabelSpace => queries
                .iter()
                .filter(|q| items.iter().any(|it| it.category == **q))
                .cloned()
                .collect(),
        }
    }
}

/// Which corpus the model was trained on, which one it is tested on, and
/// the task. Zero-shot requires the two corpora to be disjoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalProtocol {
    pub train_corpus_id: String,
    pub test_corpus_id: String,
    pub mode: EvalMode,
}

impl EvalProtocol {
    pub fn new(train_corpus_id: impl Into<String>, test_corpus_id: impl Into<String>, mode: EvalMode) -> Result<Self> {
        let p = Self {
            train_corpus_id: train_corpus_id.into(),
            test_corpus_id: test_corpus_id.into(),
            mode,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.mode == EvalMode::ZeroShot && self.train_corpus_id == self.test_corpus_id {
            return Err(EvalError::CorpusOverlapInZeroShot(self.test_corpus_id.clone()));
        }
        Ok(())
    }
}

/// One held-out audio segment and its true category.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalItem {
    pub segment_id: String,
    pub category: String,
    pub patches: Array2<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryResult {
    pub n: usize,
    #[serde(rename = "R@1")]
    pub r1: f64,
    pub top1: f64,
}

/// Recall percentages; `top1` is micro-averaged over samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub protocol: EvalProtocol,
    #[serde(rename = "R@1")]
    pub r1: f64,
    #[serde(rename = "R@3")]
    pub r3: f64,
    #[serde(rename = "R@5")]
    pub r5: f64,
    pub top1: f64,
    pub n_queries: usize,
    pub prompts: Vec<String>,
    pub per_category: BTreeMap<String, CategoryResult>,
}

/// Embed every item, rank the category prompts for each, and report
/// retrieval recall and nearest-prompt accuracy.
pub fn run_protocol(
    protocol: &EvalProtocol,
    model: &DualEncoder,
    items: &[EvalItem],
    prompts: &[String],
) -> Result<EvalReport> {
    protocol.validate()?;
    if prompts.is_empty() {
        return Err(EvalError::EmptyPromptSet);
    }
    if items.is_empty() {
        return Err(EvalError::EmptyEvalSet);
    }
    let prompt_emb = prompts
        .par_iter()
        .map(|p| model.embed_text(p))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let audio_emb = items
        .par_iter()
        .map(|it| model.embed_patches(&it.patches))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let truth: Vec<Option<usize>> = items
        .iter()
        .map(|it| prompts.iter().position(|p| *p == it.category))
        .collect();
    let sim = SimilarityMatrix::from_embeddings(
        &audio_emb,
        &prompt_emb,
        items.iter().map(|i| i.segment_id.clone()).collect(),
        prompts.to_vec(),
        truth.clone(),
    )?;
    let recalls = recall_at_k(&sim, &RECALL_KS)?;

    let mut per: BTreeMap<String, (usize, usize, usize)> = BTreeMap::new();
    let mut correct = 0;
    for (i, emb) in audio_emb.iter().enumerate() {
        let t = truth[i].expect("checked by recall_at_k");
        let hit = zero_shot_classify(emb.view(), &prompt_emb)? == t;
        let r1 = super::pessimistic_rank(sim.scores.row(i), t) == 1;
        correct += usize::from(hit);
        let e = per.entry(items[i].category.clone()).or_default();
        e.0 += 1;
        e.1 += usize::from(r1);
        e.2 += usize::from(hit);
    }
    let pct = |k: usize, n: usize| 100.0 * k as f64 / n as f64;
    Ok(EvalReport {
        protocol: protocol.clone(),
        r1: recalls[0],
        r3: recalls[1],
        r5: recalls[2],
        top1: pct(correct, items.len()),
        n_queries: items.len(),
        prompts: prompts.to_vec(),
        per_category: per
            .into_iter()
            .map(|(c, (n, r1, hit))| {
                (
                    c,
                    CategoryResult {
                        n,
                        r1: pct(r1, n),
                        top1: pct(hit, n),
                    },
                )
            })
            .collect(),
    })
}
