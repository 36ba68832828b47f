//! Audio-text corpus construction: ship-type taxonomy, AIS/audio pairing,
//! caption rendering, manifests and per-category statistics.

mod caption;
mod manifest;
mod pairing;
mod stats;
mod taxonomy;

pub use caption::{parse_fine_caption, render_caption, FineCaption, Granularity};
pub use manifest::{
    read_audio_index, read_jsonl, read_manifest, segment_split, write_jsonl, AudioSegmentRef,
    AudioTextPair, Split,
};
pub use pairing::{pair_audio_with_ais, build_pairs, PairedRecord, PairingConfig, PairingOutput, SkipReason, SkipReport};
pub use stats::{
    corpus_stats, five_number_summary, quantile, CategoryStats, FiveNumber, QuantileRule, StatsReport,
};
pub use taxonomy::{map_shiptype, CategoryTaxonomy, INDETERMINATE, QUERY_SET};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("ship-type code {0} out of range")]
    CodeOutOfRange(i64),
    #[error("records are not sorted by timestamp (index {0})")]
    UnsortedInput(usize),
    #[error("negative skew tolerance {0} ms")]
    NegativeSkew(i64),
    #[error("cannot caption a record of indeterminate category")]
    IndeterminateCategory,
    #[error("caption does not match the fine template: {0:?}")]
    UnparseableCaption(String),
    #[error("invalid audio segment: {0}")]
    InvalidSegment(String),
    #[error("{path}:{line}: {source}")]
    Json {
        path: String,
        line: usize,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CorpusError>;
