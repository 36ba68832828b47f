//! File-level stages behind the command line: decode, build, featurize,
//! train, eval, stats and synthetic corpus generation.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::ais::{
    decode_feed, encode_position_report, encode_sixbit, encode_static_report, format_ais_timestamp,
    DecodedAisRecord, PositionReport, StaticReport,
};
use crate::audio::{read_wav, write_wav, AudioError};
use crate::config::{hash_json, ConfigError, PipelineConfig};
use crate::corpus::{
    build_pairs, corpus_stats, pair_audio_with_ais, read_audio_index, read_jsonl, read_manifest, write_jsonl,
    AudioSegmentRef, AudioTextPair, CorpusError, SkipReport, Split, StatsReport, QUERY_SET,
};
use crate::dsp::{dominant_frequency, log_mel, DspConfig, DspError};
use crate::eval::{run_protocol, EvalError, EvalItem, EvalMode, EvalProtocol, EvalReport, PromptSet};
use crate::features::{FeatureError, FeatureMeta, FeatureSet};
use crate::model::{load_checkpoint, save_checkpoint, BpeVocab, DualEncoder, ModelError};
use crate::synth::{tone_band_clip, TOY_CLASSES};
use crate::train::{train, EpochLog, Example, TrainError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error(transparent)]
    Features(#[from] FeatureError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("segment {0} has no features")]
    MissingFeatures(String),
    #[error("feature DSP hash {features} does not match checkpoint {checkpoint}")]
    ConfigHashMismatch { features: String, checkpoint: String },
    #[error("{0}")]
    Input(String),
}

impl PipelineError {
    /// Errors caused by the user's inputs rather than a broken invariant.
    pub fn is_input_error(&self) -> bool {
        !matches!(
            self,
            Self::Train(TrainError::NonFiniteLoss { .. }) | Self::Model(ModelError::DimMismatch(_))
        )
    }
}

pub type Result<T> = std::result::Result<T, PipelineError>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(io_err(path))
}

/// Path of the provenance file written next to a text artifact.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    path.with_file_name(name)
}

fn write_sidecar(path: &Path, stage: &str, cfg: &PipelineConfig, extra: serde_json::Value) -> Result<()> {
    let meta = json!({
        "stage": stage,
        "config_hash": cfg.hash(),
        "config": cfg,
        "summary": extra,
    });
    let side = sidecar_path(path);
    let mut out = create(&side)?;
    serde_json::to_writer_pretty(&mut out, &meta).map_err(|e| PipelineError::Input(e.to_string()))?;
    out.write_all(b"\n").map_err(io_err(&side))?;
    out.flush().map_err(io_err(&side))
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut out = create(path)?;
    write_jsonl(&mut out, rows).map_err(io_err(path))?;
    out.flush().map_err(io_err(path))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecodeSummary {
    pub records: usize,
    pub static_reports: usize,
    pub rejected: usize,
    /// First few rejected lines with their errors.
    pub rejected_examples: Vec<String>,
}

pub fn decode_stage(input: &Path, out: &Path, cfg: &PipelineConfig) -> Result<DecodeSummary> {
    let feed = decode_feed(open(input)?, cfg.ais.salt.as_bytes()).map_err(io_err(input))?;
    write_rows(out, &feed.records)?;
    let summary = DecodeSummary {
        records: feed.records.len(),
        static_reports: feed.static_reports,
        rejected: feed.rejected.len(),
        rejected_examples: feed
            .rejected
            .iter()
            .take(10)
            .map(|r| format!("line {}: {}", r.line, r.error))
            .collect(),
    };
    write_sidecar(out, "decode", cfg, json!(summary))?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BuildSummary {
    pub records: usize,
    pub paired: usize,
    pub rows: usize,
    pub skipped: SkipReport,
}

/// Resolve relative audio paths against the directory of the index file.
fn absolutize(seg: &mut AudioSegmentRef, base: &Path) {
    let p = Path::new(&seg.file_path);
    if p.is_relative() {
        seg.file_path = base.join(p).display().to_string();
    }
}

pub fn build_stage(ais: &Path, audio_index: &Path, out: &Path, cfg: &PipelineConfig) -> Result<BuildSummary> {
    let records: Vec<DecodedAisRecord> = read_jsonl(ais)?;
    let mut segments = read_audio_index(audio_index)?;
    let base = audio_index
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let base = base.canonicalize().map_err(io_err(base))?;
    for s in &mut segments {
        absolutize(s, &base);
    }
    let paired = pair_audio_with_ais(&records, &segments, &cfg.corpus.pairing)?;
    let rows = build_pairs(
        &paired.pairs,
        &cfg.corpus.granularities,
        &cfg.corpus.corpus_id,
        cfg.seed,
        cfg.corpus.eval_fraction,
    )?;
    write_rows(out, &rows)?;
    let summary = BuildSummary {
        records: records.len(),
        paired: paired.pairs.len(),
        rows: rows.len(),
        skipped: paired.report,
    };
    write_sidecar(out, "build", cfg, json!(summary))?;
    Ok(summary)
}

/// Segments of a manifest in first-appearance order, with their category.
fn unique_segments<'a>(rows: impl IntoIterator<Item = &'a AudioTextPair>) -> Vec<(&'a AudioSegmentRef, &'a str)> {
    let mut seen = std::collections::HashSet::new();
    rows.into_iter()
        .filter(|r| seen.insert(r.segment.segment_id()))
        .map(|r| (&r.segment, r.category.as_str()))
        .collect()
}

fn featurize_segment(seg: &AudioSegmentRef, dsp: &DspConfig) -> Result<Array2<f64>> {
    let audio = read_wav(Path::new(&seg.file_path))?;
    if audio.sample_rate != seg.sample_rate {
        return Err(PipelineError::Input(format!(
            "{}: index says {} Hz, file is {} Hz",
            seg.file_path, seg.sample_rate, audio.sample_rate
        )));
    }
    Ok(log_mel(&audio.samples, audio.sample_rate, dsp)?.values)
}

pub fn dsp_hash(dsp: &DspConfig) -> String {
    hash_json(dsp)
}

pub fn featurize_manifest(rows: &[AudioTextPair], dsp: &DspConfig, config_hash: &str) -> Result<FeatureSet> {
    dsp.validate()?;
    let segments = unique_segments(rows);
    let spectrograms = segments
        .par_iter()
        .map(|(seg, _)| featurize_segment(seg, dsp))
        .collect::<Result<Vec<_>>>()?;
    Ok(FeatureSet {
        meta: FeatureMeta {
            dsp: dsp.clone(),
            dsp_hash: dsp_hash(dsp),
            config_hash: config_hash.to_string(),
            segment_ids: segments.iter().map(|(s, _)| s.segment_id()).collect(),
        },
        spectrograms,
    })
}

pub fn featurize_stage(manifest: &Path, out: &Path, cfg: &PipelineConfig) -> Result<usize> {
    let rows = read_manifest(manifest)?;
    let dsp = cfg.dsp.resolve()?;
    let set = featurize_manifest(&rows, &dsp, &cfg.hash())?;
    let mut w = create(out)?;
    set.write(&mut w)?;
    w.flush().map_err(io_err(out))?;
    Ok(set.spectrograms.len())
}

pub fn read_features(path: &Path) -> Result<FeatureSet> {
    Ok(FeatureSet::read(open(path)?)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub config_hash: String,
    pub config: PipelineConfig,
    pub dsp: DspConfig,
    pub dsp_hash: String,
    pub train_corpus_ids: Vec<String>,
    pub n_examples: usize,
    pub steps: usize,
    pub epochs: Vec<EpochLog>,
    pub frozen_checksum: String,
}

/// Tokenizer corpus: training captions plus every taxonomy query.
fn tokenizer_corpus(rows: &[&AudioTextPair]) -> Vec<String> {
    let mut texts: Vec<String> = rows.iter().map(|r| r.caption.clone()).collect();
    texts.extend(QUERY_SET.iter().map(|q| q.to_string()));
    texts
}

/// Train on the `Train` split of `rows` and return the model with its
/// provenance record.
pub fn train_model(
    rows: &[AudioTextPair],
    features: &FeatureSet,
    cfg: &PipelineConfig,
    on_epoch: impl FnMut(&EpochLog),
) -> Result<(DualEncoder, CheckpointMeta)> {
    cfg.validate()?;
    let train_rows: Vec<&AudioTextPair> = rows.iter().filter(|r| r.split == Split::Train).collect();
    if train_rows.len() < 2 {
        return Err(PipelineError::Input(format!(
            "{} training pairs; at least 2 are needed",
            train_rows.len()
        )));
    }
    let vocab = BpeVocab::train(&tokenizer_corpus(&train_rows), cfg.model.vocab_size, cfg.model.max_len)?;
    let mut model = DualEncoder::new(cfg.model.clone(), vocab, features.shape(), cfg.seed)?;
    let index = features.index();
    let mut patch_cache: HashMap<usize, Array2<f64>> = HashMap::new();
    let mut examples = Vec::with_capacity(train_rows.len());
    for row in &train_rows {
        let id = row.segment.segment_id();
        let &i = index.get(id.as_str()).ok_or(PipelineError::MissingFeatures(id))?;
        if let std::collections::hash_map::Entry::Vacant(e) = patch_cache.entry(i) {
            e.insert(model.patches_of(&features.spectrograms[i])?);
        }
        examples.push(Example {
            patches: patch_cache[&i].clone(),
            tokens: model.vocab().encode(&row.caption),
        });
    }
    let summary = train(&mut model, &examples, &cfg.train, on_epoch)?;
    let mut corpus_ids: Vec<String> = train_rows.iter().map(|r| r.corpus_id.clone()).collect();
    corpus_ids.sort();
    corpus_ids.dedup();
    let meta = CheckpointMeta {
        config_hash: cfg.hash(),
        config: cfg.clone(),
        dsp: features.meta.dsp.clone(),
        dsp_hash: features.meta.dsp_hash.clone(),
        train_corpus_ids: corpus_ids,
        n_examples: examples.len(),
        steps: summary.steps,
        epochs: summary.epochs,
        frozen_checksum: summary.frozen_checksum,
    };
    Ok((model, meta))
}

pub fn write_checkpoint(path: &Path, model: &DualEncoder, meta: &CheckpointMeta) -> Result<()> {
    let mut out = create(path)?;
    save_checkpoint(&mut out, model, json!(meta))?;
    out.flush().map_err(io_err(path))
}

pub fn read_checkpoint(path: &Path) -> Result<(DualEncoder, CheckpointMeta)> {
    let (model, header) = load_checkpoint(open(path)?)?;
    let meta: CheckpointMeta = serde_json::from_value(header.meta)
        .map_err(|e| ModelError::Checkpoint(format!("checkpoint provenance: {e}")))?;
    Ok((model, meta))
}

pub fn write_epoch_csv(path: &Path, epochs: &[EpochLog]) -> Result<()> {
    let mut out = create(path)?;
    let mut text = String::from("epoch,loss,lr,tau\n");
    for e in epochs {
        text.push_str(&format!("{},{},{},{}\n", e.epoch, e.mean_loss, e.lr, e.tau));
    }
    out.write_all(text.as_bytes()).map_err(io_err(path))?;
    out.flush().map_err(io_err(path))
}

pub fn train_stage(
    manifest: &Path,
    features: &Path,
    out: &Path,
    epoch_csv: &Path,
    cfg: &PipelineConfig,
    on_epoch: impl FnMut(&EpochLog),
) -> Result<CheckpointMeta> {
    let rows = read_manifest(manifest)?;
    let features = read_features(features)?;
    let expected = dsp_hash(&cfg.dsp.resolve()?);
    if features.meta.dsp_hash != expected {
        return Err(PipelineError::ConfigHashMismatch {
            features: features.meta.dsp_hash.clone(),
            checkpoint: expected,
        });
    }
    let (model, meta) = train_model(&rows, &features, cfg, on_epoch)?;
    write_checkpoint(out, &model, &meta)?;
    write_epoch_csv(epoch_csv, &meta.epochs)?;
    Ok(meta)
}

/// Which manifest rows an evaluation uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitFilter {
    Train,
    Eval,
    All,
}

impl std::str::FromStr for SplitFilter {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "train" => Ok(Self::Train),
            "eval" => Ok(Self::Eval),
            "all" => Ok(Self::All),
            other => Err(format!("unknown split {other:?}")),
        }
    }
}

impl SplitFilter {
    /// Held-out rows for same-corpus protocols, the whole manifest for zero-shot.
    pub fn default_for(mode: EvalMode) -> Self {
        match mode {
            EvalMode::ZeroShot => Self::All,
            EvalMode::Retrieval | EvalMode::Supervised => Self::Eval,
        }
    }

    fn keeps(self, split: Split) -> bool {
        match self {
            Self::All => true,
            Self::Train => split == Split::Train,
            Self::Eval => split == Split::Eval,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub mode: EvalMode,
    pub split: SplitFilter,
    pub prompt_set: PromptSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOutput {
    #[serde(flatten)]
    pub report: EvalReport,
    pub prompt_set: PromptSet,
    pub split: SplitFilter,
    pub checkpoint_config_hash: String,
    pub dsp_hash: String,
}

pub fn evaluate(
    model: &DualEncoder,
    meta: &CheckpointMeta,
    rows: &[AudioTextPair],
    features: Option<&FeatureSet>,
    opts: &EvalOptions,
) -> Result<EvalOutput> {
    let selected: Vec<&AudioTextPair> = rows.iter().filter(|r| opts.split.keeps(r.split)).collect();
    let test_corpus = selected.first().map(|r| r.corpus_id.clone()).unwrap_or_default();
    if let Some(other) = selected.iter().find(|r| r.corpus_id != test_corpus) {
        return Err(PipelineError::Input(format!(
            "manifest mixes corpora {test_corpus:?} and {:?}",
            other.corpus_id
        )));
    }
    let train_corpus = meta.train_corpus_ids.join("+");
    if opts.mode == EvalMode::ZeroShot && meta.train_corpus_ids.contains(&test_corpus) {
        return Err(EvalError::CorpusOverlapInZeroShot(test_corpus).into());
    }
    let protocol = EvalProtocol::new(train_corpus, test_corpus, opts.mode)?;
    let segments = unique_segments(selected.iter().copied());
    let spectrograms: Vec<Array2<f64>> = match features {
        Some(f) => {
            if f.meta.dsp_hash != meta.dsp_hash {
                return Err(PipelineError::ConfigHashMismatch {
                    features: f.meta.dsp_hash.clone(),
                    checkpoint: meta.dsp_hash.clone(),
                });
            }
            let index = f.index();
            segments
                .iter()
                .map(|(s, _)| {
                    let id = s.segment_id();
                    index
                        .get(id.as_str())
                        .map(|&i| f.spectrograms[i].clone())
                        .ok_or(PipelineError::MissingFeatures(id))
                })
                .collect::<Result<_>>()?
        }
        None => segments
            .par_iter()
            .map(|(s, _)| featurize_segment(s, &meta.dsp))
            .collect::<Result<_>>()?,
    };
    let items = segments
        .iter()
        .zip(&spectrograms)
        .map(|((seg, cat), spec)| {
            Ok(EvalItem {
                segment_id: seg.segment_id(),
                category: cat.to_string(),
                patches: model.patches_of(spec)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let queries: Vec<String> = QUERY_SET.iter().map(|q| q.to_string()).collect();
    let prompts = opts.prompt_set.select(&queries, &items);
    let report = run_protocol(&protocol, model, &items, &prompts)?;
    Ok(EvalOutput {
        report,
        prompt_set: opts.prompt_set,
        split: opts.split,
        checkpoint_config_hash: meta.config_hash.clone(),
        dsp_hash: meta.dsp_hash.clone(),
    })
}

pub fn write_report(path: &Path, report: &EvalOutput) -> Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, report).map_err(|e| PipelineError::Input(e.to_string()))?;
    out.write_all(b"\n").map_err(io_err(path))?;
    out.flush().map_err(io_err(path))
}

pub fn eval_stage(
    checkpoint: &Path,
    manifest: &Path,
    features: Option<&Path>,
    out: &Path,
    opts: &EvalOptions,
) -> Result<EvalOutput> {
    let (model, meta) = read_checkpoint(checkpoint)?;
    let rows = read_manifest(manifest)?;
    let features = features.map(read_features).transpose()?;
    let report = evaluate(&model, &meta, &rows, features.as_ref(), opts)?;
    write_report(out, &report)?;
    Ok(report)
}

/// Dominant frequency of every row's segment (computed once per segment).
pub fn dominant_frequencies(rows: &[AudioTextPair]) -> Result<Vec<Option<f64>>> {
    let segments = unique_segments(rows);
    let freqs = segments
        .par_iter()
        .map(|(seg, _)| {
            let audio = read_wav(Path::new(&seg.file_path))?;
            let dsp = DspConfig {
                sample_rate: audio.sample_rate,
                fmax: f64::from(audio.sample_rate) / 2.0,
                ..DspConfig::default()
            };
            Ok((seg.segment_id(), dominant_frequency(&audio.samples, audio.sample_rate, &dsp)?))
        })
        .collect::<Result<HashMap<String, f64>>>()?;
    Ok(rows.iter().map(|r| freqs.get(&r.segment.segment_id()).copied()).collect())
}

pub fn stats_stage(manifest: &Path, out: &Path, with_audio: bool, cfg: &PipelineConfig) -> Result<StatsReport> {
    let rows = read_manifest(manifest)?;
    let freqs = if with_audio {
        dominant_frequencies(&rows)?
    } else {
        vec![None; rows.len()]
    };
    let report = corpus_stats(&rows, &freqs, cfg.corpus.quantile_rule);
    let mut w = create(out)?;
    w.write_all(report.to_csv().as_bytes()).map_err(io_err(out))?;
    w.flush().map_err(io_err(out))?;
    write_sidecar(
        out,
        "stats",
        cfg,
        json!({"pairs": report.total_pairs(), "duration_ms": report.total_duration_ms()}),
    )?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    /// Segments per class.
    pub per_class: usize,
    pub seconds: f64,
    pub sample_rate: u32,
    pub noise_std: f64,
    pub seed: u64,
    /// Epoch milliseconds of the first segment.
    pub start_ms: i64,
    /// Offset added to every MMSI, so corpora do not share vessels.
    pub mmsi_base: u32,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            per_class: 20,
            seconds: 2.0,
            sample_rate: 16_000,
            noise_std: 0.1,
            seed: 0,
            start_ms: 1_704_067_200_000,
            mmsi_base: 316_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthSummary {
    pub feed: PathBuf,
    pub audio_index: PathBuf,
    pub segments: usize,
}

/// Write a synthetic corpus: `ais.txt` (timestamped payloads), one WAV per
/// segment under `audio/`, and `audio_index.jsonl`. Every segment carries
/// one vessel whose position report falls inside it; classes alternate.
pub fn synth_corpus(dir: &Path, cfg: &SynthConfig) -> Result<SynthSummary> {
    let audio_dir = dir.join("audio");
    std::fs::create_dir_all(&audio_dir).map_err(io_err(&audio_dir))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.per_class * TOY_CLASSES.len();
    let duration_ms = (cfg.seconds * 1000.0).round() as i64;
    let mut feed = String::new();
    let mut index = Vec::with_capacity(n);
    for i in 0..n {
        let class = TOY_CLASSES[i % TOY_CLASSES.len()];
        let mmsi = cfg.mmsi_base + i as u32;
        let start = cfg.start_ms + i as i64 * 60_000;
        let name = format!("seg_{i:04}.wav");
        let clip = tone_band_clip(&mut rng, class.band_hz, cfg.seconds, cfg.sample_rate, cfg.noise_std);
        write_wav(&audio_dir.join(&name), &clip, cfg.sample_rate)?;
        index.push(AudioSegmentRef {
            file_path: format!("audio/{name}"),
            sample_rate: cfg.sample_rate,
            start,
            duration: duration_ms,
            hydrophone_id: "synth-1".into(),
        });

        let stat = StaticReport {
            mmsi,
            ship_type: class.ship_type,
            name: format!("SYNTH {i}"),
        };
        let report = PositionReport {
            msg_type: 1,
            repeat: 0,
            mmsi,
            nav_status: 0,
            rate_of_turn: 0,
            sog_raw: 50 + (i as u16 % 100),
            position_accuracy: true,
            lon_raw: (-123.4514 * 600_000.0) as i32 + i as i32 * 60,
            lat_raw: (48.7697 * 600_000.0) as i32 + i as i32 * 60,
            cog_raw: (i as u16 * 37) % 3600,
            true_heading: (i as u16 * 11) % 360,
            utc_second: 0,
        };
        let stat_bits = encode_static_report(&stat).map_err(|e| PipelineError::Input(e.to_string()))?;
        let pos_bits = encode_position_report(&report).map_err(|e| PipelineError::Input(e.to_string()))?;
        feed.push_str(&format!("{}\t{}\n", encode_sixbit(&stat_bits).0, format_ais_timestamp(start)));
        feed.push_str(&format!(
            "{}\t{}\n",
            encode_sixbit(&pos_bits).0,
            format_ais_timestamp(start + duration_ms / 2)
        ));
    }
    let feed_path = dir.join("ais.txt");
    std::fs::write(&feed_path, feed).map_err(io_err(&feed_path))?;
    let index_path = dir.join("audio_index.jsonl");
    write_rows(&index_path, &index)?;
    Ok(SynthSummary {
        feed: feed_path,
        audio_index: index_path,
        segments: n,
    })
}

/// Run decode and build on a synthetic corpus directory.
pub fn synth_manifest(dir: &Path, cfg: &PipelineConfig) -> Result<PathBuf> {
    let records = dir.join("records.jsonl");
    decode_stage(&dir.join("ais.txt"), &records, cfg)?;
    let manifest = dir.join("manifest.jsonl");
    build_stage(&records, &dir.join("audio_index.jsonl"), &manifest, cfg)?;
    Ok(manifest)
}

/// Category counts of a manifest, for summaries.
pub fn category_counts(rows: &[AudioTextPair]) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for r in rows {
        *counts.entry(r.category.clone()).or_insert(0) += 1;
    }
    counts
}
