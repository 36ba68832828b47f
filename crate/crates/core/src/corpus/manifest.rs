use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::caption::Granularity;
use super::{CorpusError, Result};
use crate::ais::DecodedAisRecord;

/// A stretch of hydrophone audio. The file at `file_path` holds audio
/// starting at `start`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AudioSegmentRef {
    pub file_path: String,
    pub sample_rate: u32,
    /// UTC epoch milliseconds.
    pub start: i64,
    /// Milliseconds.
    pub duration: i64,
    pub hydrophone_id: String,
}

impl AudioSegmentRef {
    pub fn end(&self) -> i64 {
        self.start + self.duration
    }

    pub fn segment_id(&self) -> String {
        format!("{}@{}", self.file_path, self.start)
    }

    pub fn validate(&self) -> Result<()> {
        if self.duration <= 0 {
            return Err(CorpusError::InvalidSegment(format!(
                "{}: duration {} ms",
                self.segment_id(),
                self.duration
            )));
        }
        if self.sample_rate == 0 {
            return Err(CorpusError::InvalidSegment(format!(
                "{}: zero sample rate",
                self.segment_id()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Eval,
}

/// One manifest row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AudioTextPair {
    pub segment: AudioSegmentRef,
    pub caption: String,
    pub category: String,
    pub granularity: Granularity,
    pub source_record: DecodedAisRecord,
    pub split: Split,
    pub corpus_id: String,
}

/// Deterministic train/eval assignment from a hash of the segment id.
pub fn segment_split(segment_id: &str, seed: u64, eval_fraction: f64) -> Split {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(segment_id.as_bytes());
    let d = h.finalize();
    let v = u64::from_le_bytes(d[..8].try_into().expect("8 bytes"));
    let unit = (v >> 11) as f64 / (1u64 << 53) as f64;
    if unit < eval_fraction {
        Split::Eval
    } else {
        Split::Train
    }
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = std::fs::File::open(path)?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|source| CorpusError::Json {
                path: path.display().to_string(),
                line: i + 1,
                source,
            })?,
        );
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize, W: Write>(mut out: W, rows: &[T]) -> std::io::Result<()> {
    for row in rows {
        serde_json::to_writer(&mut out, row)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn read_manifest(path: &Path) -> Result<Vec<AudioTextPair>> {
    read_jsonl(path)
}

pub fn read_audio_index(path: &Path) -> Result<Vec<AudioSegmentRef>> {
    let segments: Vec<AudioSegmentRef> = read_jsonl(path)?;
    for s in &segments {
        s.validate()?;
    }
    Ok(segments)
}
