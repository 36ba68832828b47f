use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::caption::{render_caption, Granularity};
use super::manifest::{segment_split, AudioSegmentRef, AudioTextPair};
use super::taxonomy::{map_shiptype, INDETERMINATE};
use super::{CorpusError, Result};
use crate::ais::DecodedAisRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PairingConfig {
    /// Largest gap between a record and the nearest segment edge that still
    /// counts as a match when no segment contains the record.
    pub max_skew_ms: i64,
    /// Keep segments heard by several vessels (one pair per vessel).
    pub keep_ambiguous: bool,
}

impl Default for PairingConfig {
    fn default() -> Self {
        Self {
            max_skew_ms: 2000,
            keep_ambiguous: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    Indeterminate,
    NoSegment,
    Ambiguous,
    /// Same vessel already paired with this segment.
    Duplicate,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipReport {
    pub indeterminate: usize,
    pub no_segment: usize,
    pub ambiguous: usize,
    pub duplicate: usize,
}

impl SkipReport {
    pub fn total(&self) -> usize {
        self.indeterminate + self.no_segment + self.ambiguous + self.duplicate
    }

    fn count(&mut self, reason: SkipReason) {
        match reason {
            SkipReason::Indeterminate => self.indeterminate += 1,
            SkipReason::NoSegment => self.no_segment += 1,
            SkipReason::Ambiguous => self.ambiguous += 1,
            SkipReason::Duplicate => self.duplicate += 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairedRecord {
    pub record_index: usize,
    pub record: DecodedAisRecord,
    pub segment: AudioSegmentRef,
    pub category: &'static str,
}

#[derive(Debug, Clone, Default)]
pub struct PairingOutput {
    pub pairs: Vec<PairedRecord>,
    /// `(record index, reason)` for every record that did not pair.
    pub skipped: Vec<(usize, SkipReason)>,
    pub report: SkipReport,
}

fn category_of(record: &DecodedAisRecord) -> &'static str {
    record
        .ship_type_code
        .and_then(|c| map_shiptype(c.into()).ok())
        .unwrap_or(INDETERMINATE)
}

fn distance(seg: &AudioSegmentRef, t: i64) -> i64 {
    if t < seg.start {
        seg.start - t
    } else if t >= seg.end() {
        t - seg.end()
    } else {
        0
    }
}

/// Attach each time-sorted AIS record to the audio segment that contains its
/// timestamp, or the nearest one within `max_skew_ms`.
///
/// A segment whose records come from more than one vessel is dropped as a
/// whole unless `keep_ambiguous` is set. Every input record ends up either
/// in `pairs` or in `skipped`.
pub fn pair_audio_with_ais(
    records: &[DecodedAisRecord],
    segments: &[AudioSegmentRef],
    config: &PairingConfig,
) -> Result<PairingOutput> {
    if config.max_skew_ms < 0 {
        return Err(CorpusError::NegativeSkew(config.max_skew_ms));
    }
    if let Some(i) = records
        .windows(2)
        .position(|w| w[1].ais_timestamp < w[0].ais_timestamp)
    {
        return Err(CorpusError::UnsortedInput(i + 1));
    }

    let mut by_hydrophone: BTreeMap<&str, Vec<&AudioSegmentRef>> = BTreeMap::new();
    for seg in segments {
        seg.validate()?;
        by_hydrophone.entry(&seg.hydrophone_id).or_default().push(seg);
    }
    for list in by_hydrophone.values_mut() {
        list.sort_by_key(|s| s.start);
        if let Some(w) = list.windows(2).find(|w| w[1].start < w[0].end()) {
            return Err(CorpusError::InvalidSegment(format!(
                "{} overlaps {}",
                w[1].segment_id(),
                w[0].segment_id()
            )));
        }
    }

    let nearest = |t: i64| -> Option<&AudioSegmentRef> {
        let mut best: Option<(i64, &AudioSegmentRef)> = None;
        for list in by_hydrophone.values() {
            let idx = list.partition_point(|s| s.start <= t);
            let candidates = [idx.checked_sub(1), Some(idx)];
            for seg in candidates.into_iter().flatten().filter_map(|i| list.get(i)) {
                let d = distance(seg, t);
                if d <= config.max_skew_ms && best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, seg));
                }
            }
        }
        best.map(|(_, s)| s)
    };

    let mut out = PairingOutput::default();
    // segment id -> (segment, record indices in time order)
    let mut assigned: BTreeMap<String, (&AudioSegmentRef, Vec<usize>)> = BTreeMap::new();
    for (i, record) in records.iter().enumerate() {
        match nearest(record.ais_timestamp) {
            Some(seg) => assigned.entry(seg.segment_id()).or_insert((seg, Vec::new())).1.push(i),
            None => out.skipped.push((i, SkipReason::NoSegment)),
        }
    }

    for (seg, members) in assigned.values() {
        let vessels: BTreeSet<u32> = members.iter().map(|&i| records[i].id).collect();
        let ambiguous = vessels.len() > 1 && !config.keep_ambiguous;
        let mut seen = BTreeSet::new();
        for &i in members {
            let record = &records[i];
            let category = category_of(record);
            let reason = if category == INDETERMINATE {
                Some(SkipReason::Indeterminate)
            } else if ambiguous {
                Some(SkipReason::Ambiguous)
            } else if !seen.insert(record.id) {
                Some(SkipReason::Duplicate)
            } else {
                None
            };
            match reason {
                Some(r) => out.skipped.push((i, r)),
                None => out.pairs.push(PairedRecord {
                    record_index: i,
                    record: record.clone(),
                    segment: (*seg).clone(),
                    category,
                }),
            }
        }
    }

    out.pairs.sort_by_key(|p| p.record_index);
    out.skipped.sort();
    for &(_, reason) in &out.skipped {
        out.report.count(reason);
    }
    Ok(out)
}

/// Render manifest rows for each requested granularity.
pub fn build_pairs(
    paired: &[PairedRecord],
    granularities: &[Granularity],
    corpus_id: &str,
    split_seed: u64,
    eval_fraction: f64,
) -> Result<Vec<AudioTextPair>> {
    let mut rows = Vec::with_capacity(paired.len() * granularities.len());
    for &g in granularities {
        for p in paired {
            rows.push(AudioTextPair {
                caption: render_caption(&p.record, p.category, g)?,
                category: p.category.to_string(),
                granularity: g,
                source_record: p.record.clone(),
                split: segment_split(&p.segment.segment_id(), split_seed, eval_fraction),
                corpus_id: corpus_id.to_string(),
                segment: p.segment.clone(),
            });
        }
    }
    Ok(rows)
}
