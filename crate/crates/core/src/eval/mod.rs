//! Audio-to-text retrieval and zero-shot classification metrics.

mod metrics;
mod protocol;

pub use metrics::{cosine_similarity, pessimistic_rank, recall_at_k, zero_shot_classify, SimilarityMatrix};
pub use protocol::{run_protocol, CategoryResult, EvalItem, EvalMode, EvalProtocol, EvalReport, PromptSet, RECALL_KS};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("zero-norm vector")]
    ZeroVector,
    #[error("query {0} has no ground-truth target")]
    MissingGroundTruth(usize),
    #[error("empty prompt set")]
    EmptyPromptSet,
    #[error("no evaluation items")]
    EmptyEvalSet,
    #[error("zero-shot evaluation requires disjoint corpora, both are {0:?}")]
    CorpusOverlapInZeroShot(String),
    #[error("shape mismatch: {0}")]
    DimMismatch(String),
    #[error("unknown prompt set {0:?}")]
    UnknownPromptSet(String),
    #[error("unknown eval mode {0:?}")]
    UnknownMode(String),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
}

pub type Result<T> = std::result::Result<T, EvalError>;
