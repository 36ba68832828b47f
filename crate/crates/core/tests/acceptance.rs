//! Acceptance criteria 1-8. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails. Tolerances and time limits are pinned below.

use std::path::Path;
use std::time::{Duration, Instant};

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use oceanforge::ais::*;
use oceanforge::config::PipelineConfig;
use oceanforge::corpus::*;
use oceanforge::dsp::*;
use oceanforge::eval::*;
use oceanforge::model::*;
use oceanforge::pipeline::*;
use oceanforge::train::*;

const AIS_ROUND_TRIPS: usize = 10_000;
const AIS_DEG_TOL: f64 = 1e-4;
const AIS_LIMIT: Duration = Duration::from_secs(5);

const DSP_LIMIT: Duration = Duration::from_secs(10);

const LORA_INSTANCES: usize = 100;
const LORA_MERGE_REL_TOL: f64 = 1e-6;
const LORA_TRAIN_STEPS: usize = 500;

const LOSS_ORACLE_TOL: f64 = 1e-10;
const LOSS_BATCHES: usize = 200;
const GRAD_REL_TOL: f64 = 1e-4;
const GRAD_EPS: f64 = 1e-5;
const GRAD_COORDS_PER_TENSOR: usize = 6;
const LOSS_LIMIT: Duration = Duration::from_secs(30);

const TOY_TRAIN_PER_CLASS: usize = 20;
const TOY_EVAL_PER_CLASS: usize = 10;
const TOY_MAX_STEPS: usize = 500;
const TOY_LIMIT: Duration = Duration::from_secs(120);

const METRIC_MATRICES: usize = 1000;

const PAIRING_FIXTURES: usize = 200;
const CAPTION_SAMPLES: usize = 5000;

const DETERMINISM_STEPS: usize = 100;

type Outcome = std::result::Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_report(rng: &mut ChaCha8Rng) -> PositionReport {
    PositionReport {
        msg_type: rng.gen_range(1..=3),
        repeat: rng.gen_range(0..=3),
        mmsi: rng.gen_range(0..1 << 30),
        nav_status: rng.gen_range(0..=15),
        rate_of_turn: rng.gen(),
        sog_raw: rng.gen_range(0..=1022),
        position_accuracy: rng.gen(),
        lon_raw: rng.gen_range(-108_000_000..=108_000_000),
        lat_raw: rng.gen_range(-54_000_000..=54_000_000),
        cog_raw: rng.gen_range(0..=3599),
        true_heading: if rng.gen_bool(0.1) { 511 } else { rng.gen_range(0..=359) },
        utc_second: rng.gen_range(0..=63),
    }
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for i in 0..AIS_ROUND_TRIPS {
        let report = random_report(&mut rng);
        let bits = encode_position_report(&report).map_err(|e| format!("encode #{i}: {e}"))?;
        let (payload, fill) = encode_sixbit(&bits);
        let mut back_bits = decode_sixbit(&payload).map_err(|e| format!("sixbit #{i}: {e}"))?;
        ensure(back_bits.len() == bits.len() + fill as usize, || format!("length #{i}"))?;
        back_bits = BitStream::from_bits(back_bits.as_slice()[..bits.len()].to_vec());
        let back = decode_position_report(&back_bits).map_err(|e| format!("decode #{i}: {e}"))?;
        ensure(back == report, || format!("round trip #{i}: {report:?} -> {back:?}"))?;
    }

    let fixture = PositionReport {
        msg_type: 3,
        repeat: 0,
        mmsi: 316_001_234,
        nav_status: 0,
        rate_of_turn: 0,
        sog_raw: 0,
        position_accuracy: false,
        lon_raw: -74_070_840,
        lat_raw: 29_261_820,
        cog_raw: 186,
        true_heading: 285,
        utc_second: 0,
    };
    let payload = encode_sixbit(&encode_position_report(&fixture).unwrap()).0;
    let line = format!("{payload}\t20240101T000000.000Z\n");
    let feed = decode_feed(line.as_bytes(), b"salt").map_err(|e| e.to_string())?;
    ensure(feed.records.len() == 1, || format!("{} records from fixture", feed.records.len()))?;
    let r = &feed.records[0];
    ensure((r.x - -123.4514).abs() < AIS_DEG_TOL, || format!("x = {}", r.x))?;
    ensure((r.y - 48.7697).abs() < AIS_DEG_TOL, || format!("y = {}", r.y))?;
    ensure(r.sog == 0.0, || format!("sog = {}", r.sog))?;
    ensure((r.cog - 18.6).abs() < 1e-12, || format!("cog = {}", r.cog))?;
    ensure(r.true_heading == 285, || format!("heading = {}", r.true_heading))?;
    Ok(format!(
        "{AIS_ROUND_TRIPS} random reports round-trip exactly; fixture -> x={:.4} y={:.4} sog={} cog={} heading={}",
        r.x, r.y, r.sog, r.cog, r.true_heading
    ))
}

fn criterion_2() -> Outcome {
    let cfg = DspConfig::default();
    let noise: Vec<f64> = {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        (0..5 * 16_000).map(|_| rng.gen_range(-0.5..0.5)).collect()
    };
    let mel = log_mel(&noise, 16_000, &cfg).map_err(|e| e.to_string())?;
    ensure(mel.values.dim() == (1024, 64), || format!("log-mel shape {:?}", mel.values.dim()))?;

    let sine: Vec<f64> = (0..5 * 16_000)
        .map(|n| (2.0 * std::f64::consts::PI * 1000.0 * n as f64 / 16_000.0).sin())
        .collect();
    let mag = stft_magnitude(&sine, &cfg).map_err(|e| e.to_string())?;
    let frames = mag.nrows();
    // interior frames and the frame average
    let argmax = |row: ndarray::ArrayView1<f64>| {
        row.iter()
            .enumerate()
            .fold((0, f64::MIN), |b, (i, &v)| if v > b.1 { (i, v) } else { b })
            .0
    };
    for t in 3..frames - 3 {
        let peak = argmax(mag.row(t));
        ensure(peak == 64, || format!("frame {t} peaks at bin {peak}"))?;
    }
    let mean = mag.mean_axis(ndarray::Axis(0)).unwrap();
    ensure(argmax(mean.view()) == 64, || format!("mean spectrum peaks at {}", argmax(mean.view())))?;

    let n10 = patch_count(1024, 64, 16, 10).map_err(|e| e.to_string())?;
    let n16 = patch_count(1024, 64, 16, 16).map_err(|e| e.to_string())?;
    let spec = Array2::from_shape_fn((1024, 64), |(i, j)| (i * 64 + j) as f64);
    let seq = extract_patches(&spec, 16, 10).map_err(|e| e.to_string())?;
    ensure(n10 == 505 && seq.len() == 505, || format!("S=10 gives {n10} ({} extracted)", seq.len()))?;
    ensure(n16 == 256, || format!("S=16 gives {n16}"))?;
    Ok(format!(
        "log-mel {:?}; 1 kHz peaks at bin 64 in frames 3..{}; patches S=10 -> {n10}, S=16 -> {n16}",
        mel.values.dim(),
        frames - 3
    ))
}

fn tiny_config() -> ModelConfig {
    ModelConfig {
        d_model: 16,
        n_heads: 2,
        n_layers: 1,
        ffn_dim: 32,
        embed_dim: 8,
        head_hidden: 8,
        lora_rank: 2,
        lora_alpha: 4.0,
        vocab_size: 300,
        max_len: 16,
        patch_size: 4,
        patch_stride: 4,
        ..ModelConfig::default()
    }
}

fn tiny_examples(model: &DualEncoder, captions: &[&str], seed: u64) -> Vec<Example> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (t, f) = model.spec_shape();
    captions
        .iter()
        .map(|c| Example {
            patches: model
                .patches_of(&Array2::from_shape_fn((t, f), |_| rng.gen_range(-8.0..0.0)))
                .unwrap(),
            tokens: model.vocab().encode(c),
        })
        .collect()
}

fn criterion_3() -> Outcome {
    // zero-initialized B: adapted forward is the frozen forward, bit for bit
    let captions = ["cargo", "tanker", "tug", "fishing", "passenger", "dredging"];
    let vocab = BpeVocab::train(&captions, 300, 16).map_err(|e| e.to_string())?;
    let mut model = DualEncoder::new(tiny_config(), vocab, (8, 8), 11).map_err(|e| e.to_string())?;
    let examples = tiny_examples(&model, &captions, 12);
    for ex in &examples {
        let a = model.embed_patches(&ex.patches).unwrap();
        let a0 = model.embed_patches_frozen(&ex.patches).unwrap();
        let t = model.embed_tokens(&ex.tokens).unwrap();
        let t0 = model.embed_tokens_frozen(&ex.tokens).unwrap();
        ensure(
            a.iter().zip(&a0).chain(t.iter().zip(&t0)).all(|(x, y)| x.to_bits() == y.to_bits()),
            || "zero-B forward differs from frozen trunk".into(),
        )?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut worst = 0.0f64;
    for _ in 0..LORA_INSTANCES {
        let d = rng.gen_range(4..48);
        let k = rng.gen_range(4..48);
        let r = rng.gen_range(1..=d.min(k) / 2);
        let mut g = |rows, cols| Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-1.0..1.0));
        let w0 = g(d, k);
        let adapter = LoraAdapter::new(g(r, k), g(d, r), 2.0 * r as f64).map_err(|e| e.to_string())?;
        let x: Array1<f64> = (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let adapted = lora_dense(&x, &w0, &adapter).map_err(|e| e.to_string())?;
        let merged = adapter.merged(&w0).dot(&x);
        let scale = adapted.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
        let err = (&adapted - &merged).iter().fold(0.0f64, |m, v| m.max(v.abs())) / scale;
        worst = worst.max(err);
    }
    ensure(worst <= LORA_MERGE_REL_TOL, || format!("merged vs adapted relative error {worst:e}"))?;

    let before = model.store().frozen_checksum();
    let cfg = TrainConfig {
        batch_size: 3,
        epochs: LORA_TRAIN_STEPS,
        max_steps: Some(LORA_TRAIN_STEPS),
        base_lr: 1e-2,
        ..TrainConfig::default()
    };
    let summary = train(&mut model, &examples, &cfg, |_| {}).map_err(|e| e.to_string())?;
    let after = model.store().frozen_checksum();
    ensure(summary.steps == LORA_TRAIN_STEPS, || format!("{} steps", summary.steps))?;
    ensure(before == after, || "frozen checksum changed".into())?;
    let moved = model.lora_layers().any(|l| model.store().value(l.b).iter().any(|&v| v != 0.0));
    ensure(moved, || "LoRA B never left zero".into())?;
    Ok(format!(
        "zero-B bit-exact; merge rel err {worst:.1e} <= {LORA_MERGE_REL_TOL:e} over {LORA_INSTANCES}; W0 checksum {}.. unchanged after {} steps",
        &after[..12],
        summary.steps
    ))
}

/// Symmetric InfoNCE written as two plain double loops.
fn naive_loss(a: &Array2<f64>, t: &Array2<f64>, tau: f64) -> f64 {
    let n = a.nrows();
    let unit = |m: &Array2<f64>, i: usize| {
        let r = m.row(i);
        let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        r.mapv(|v| v / norm)
    };
    let mut s = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            s[i][j] = unit(a, i).dot(&unit(t, j));
        }
    }
    let mut total = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        let mut col = 0.0;
        for j in 0..n {
            row += (s[i][j] / tau).exp();
            col += (s[j][i] / tau).exp();
        }
        total += -((s[i][i] / tau).exp() / row).ln() - ((s[i][i] / tau).exp() / col).ln();
    }
    total / (2.0 * n as f64)
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for _ in 0..LOSS_BATCHES {
        let n = rng.gen_range(2..=16);
        let d = rng.gen_range(1..=32);
        let tau = rng.gen_range(0.05..1.0);
        let a = Array2::from_shape_fn((n, d), |_| rng.gen_range(-1.0..1.0));
        let t = Array2::from_shape_fn((n, d), |_| rng.gen_range(-1.0..1.0));
        let fast = contrastive_loss(&a, &t, tau, LossOptions::default()).map_err(|e| e.to_string())?;
        worst = worst.max((fast - naive_loss(&a, &t, tau)).abs());
    }
    ensure(worst <= LOSS_ORACLE_TOL, || format!("loss vs oracle {worst:e}"))?;

    let uniform = Array2::from_elem((4, 8), 0.25);
    let l = contrastive_loss(&uniform, &uniform, 0.07, LossOptions::default()).map_err(|e| e.to_string())?;
    ensure(l == 4f64.ln(), || format!("uniform N=4 loss {l:.17} != ln 4"))?;

    let captions = ["cargo ship", "tanker", "tug boat", "fishing vessel", "sailboat"];
    let vocab = BpeVocab::train(&captions, 300, 16).map_err(|e| e.to_string())?;
    let mut model = DualEncoder::new(tiny_config(), vocab, (8, 8), 21).map_err(|e| e.to_string())?;
    let ids = model.store().trainable();
    for &id in &ids {
        model.store_mut().value_mut(id).mapv_inplace(|v| v + rng.gen_range(-0.2..0.2));
    }
    let examples = tiny_examples(&model, &captions, 22);
    let batch: Vec<&Example> = examples.iter().collect();
    let grad_err =
        check_model_gradients(&mut model, &batch, GRAD_EPS, GRAD_COORDS_PER_TENSOR, 23).map_err(|e| e.to_string())?;
    ensure(grad_err <= GRAD_REL_TOL, || format!("gradient rel err {grad_err:e}"))?;
    Ok(format!(
        "oracle max |diff| {worst:.1e} over {LOSS_BATCHES} batches; uniform N=4 = ln 4 exactly; finite-diff rel err {grad_err:.1e} over {} tensors",
        ids.len()
    ))
}

fn synth(dir: &Path, corpus_id: &str, per_class: usize, seed: u64, mmsi_base: u32, cfg: &PipelineConfig) -> std::result::Result<std::path::PathBuf, String> {
    let s = SynthConfig {
        per_class,
        seed,
        mmsi_base,
        ..SynthConfig::default()
    };
    synth_corpus(dir, &s).map_err(|e| e.to_string())?;
    let mut c = cfg.clone();
    c.corpus.corpus_id = corpus_id.into();
    synth_manifest(dir, &c).map_err(|e| e.to_string())
}

fn criterion_5() -> Outcome {
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut cfg = PipelineConfig::toy().finalize();
    cfg.train.max_steps = Some(TOY_MAX_STEPS);
    let train_dir = root.path().join("train");
    let eval_dir = root.path().join("eval");
    let train_manifest = synth(&train_dir, "toy-a", TOY_TRAIN_PER_CLASS, 100, 316_000_000, &cfg)?;
    let eval_manifest = synth(&eval_dir, "toy-b", TOY_EVAL_PER_CLASS, 200, 317_000_000, &cfg)?;
    let n_train = read_manifest(&train_manifest).map_err(|e| e.to_string())?.len();
    let n_eval = read_manifest(&eval_manifest).map_err(|e| e.to_string())?.len();
    ensure(n_train == 60 && n_eval == 30, || format!("{n_train} train / {n_eval} eval pairs"))?;

    let features = root.path().join("train.bin");
    featurize_stage(&train_manifest, &features, &cfg).map_err(|e| e.to_string())?;
    let ckpt = root.path().join("ckpt.bin");
    let meta = train_stage(&train_manifest, &features, &ckpt, &root.path().join("epochs.csv"), &cfg, |_| {})
        .map_err(|e| e.to_string())?;
    ensure(meta.steps <= TOY_MAX_STEPS, || format!("{} steps", meta.steps))?;

    let run = |mode, prompt_set| {
        let opts = EvalOptions {
            mode,
            split: SplitFilter::All,
            prompt_set,
        };
        eval_stage(&ckpt, &eval_manifest, None, &root.path().join("report.json"), &opts).map_err(|e| e.to_string())
    };
    let retrieval = run(EvalMode::Retrieval, PromptSet::LabelSpace)?;
    let zero_shot = run(EvalMode::ZeroShot, PromptSet::LabelSpace)?;
    let full = run(EvalMode::ZeroShot, PromptSet::Taxonomy)?;
    ensure(retrieval.report.r1 == 100.0, || format!("retrieval R@1 {}", retrieval.report.r1))?;
    ensure(zero_shot.report.top1 == 100.0, || format!("zero-shot top1 {}", zero_shot.report.top1))?;
    Ok(format!(
        "{} steps; retrieval R@1 {:.1}, zero-shot top1 {:.1} over the {} test classes (full 25-query set, informational: top1 {:.1})",
        meta.steps,
        retrieval.report.r1,
        zero_shot.report.top1,
        zero_shot.report.prompts.len(),
        full.report.top1
    ))
}

/// Rank of the true target after sorting by score, true target last among ties.
fn oracle_recall(scores: &Array2<f64>, truth: &[usize], k: usize) -> f64 {
    let mut hits = 0;
    for (q, &t) in truth.iter().enumerate() {
        let mut order: Vec<usize> = (0..scores.ncols()).collect();
        order.sort_by(|&a, &b| {
            scores[[q, b]]
                .partial_cmp(&scores[[q, a]])
                .unwrap()
                .then((a == t).cmp(&(b == t)))
        });
        let rank = order.iter().position(|&j| j == t).unwrap() + 1;
        hits += usize::from(rank <= k);
    }
    100.0 * hits as f64 / truth.len() as f64
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut tie_rich = 0;
    for m in 0..METRIC_MATRICES {
        let q = rng.gen_range(1..=20);
        let t = rng.gen_range(1..=20);
        let levels = if m % 2 == 0 { rng.gen_range(1..=3) } else { 0 };
        tie_rich += usize::from(levels > 0);
        let scores = Array2::from_shape_fn((q, t), |_| {
            let v: f64 = rng.gen_range(-1.0..1.0);
            if levels > 0 {
                (v * levels as f64).round() / levels as f64
            } else {
                v
            }
        });
        let truth: Vec<usize> = (0..q).map(|_| rng.gen_range(0..t)).collect();
        let sim = SimilarityMatrix {
            scores: scores.clone(),
            query_ids: (0..q).map(|i| i.to_string()).collect(),
            target_ids: (0..t).map(|i| i.to_string()).collect(),
            truth: truth.iter().map(|&j| Some(j)).collect(),
        };
        let got = recall_at_k(&sim, &RECALL_KS).map_err(|e| e.to_string())?;
        for (k, r) in RECALL_KS.iter().zip(&got) {
            let want = oracle_recall(&scores, &truth, *k);
            ensure(*r == want, || format!("matrix {m}: R@{k} {r} vs oracle {want}"))?;
        }
        ensure(got[0] <= got[1] && got[1] <= got[2] && got[2] <= 100.0, || format!("matrix {m}: not monotone {got:?}"))?;
    }
    Ok(format!("{METRIC_MATRICES} matrices ({tie_rich} tie-rich) equal the sort oracle; R@1 <= R@3 <= R@5 on all"))
}

fn record(t: i64, id: u32, ship_type: Option<u8>, rng: &mut ChaCha8Rng) -> DecodedAisRecord {
    let lon_raw: i32 = rng.gen_range(-108_000_000..=108_000_000);
    let lat_raw: i32 = rng.gen_range(-54_000_000..=54_000_000);
    DecodedAisRecord {
        x: f64::from(lon_raw) / 600_000.0,
        y: f64::from(lat_raw) / 600_000.0,
        sog: f64::from(rng.gen_range(0u16..=1022)) / 10.0,
        cog: f64::from(rng.gen_range(0u16..=3599)) / 10.0,
        true_heading: if rng.gen_bool(0.2) { HEADING_UNAVAILABLE } else { rng.gen_range(0..=359) },
        ais_timestamp: t,
        id,
        msg_type: 1,
        ship_type_code: ship_type,
    }
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let codes: [Option<u8>; 6] = [Some(70), Some(80), Some(52), Some(30), Some(0), None];
    let mut total_records = 0;
    for f in 0..PAIRING_FIXTURES {
        let mut segments = Vec::new();
        for h in 0..rng.gen_range(1..=3) {
            let mut start = rng.gen_range(0..10_000i64);
            for _ in 0..rng.gen_range(0..8) {
                let duration = rng.gen_range(1_000..20_000);
                segments.push(AudioSegmentRef {
                    file_path: format!("h{h}/{start}.wav"),
                    sample_rate: 16_000,
                    start,
                    duration,
                    hydrophone_id: format!("h{h}"),
                });
                start += duration + rng.gen_range(0..10_000);
            }
        }
        let n = rng.gen_range(0..40);
        let mut times: Vec<i64> = (0..n).map(|_| rng.gen_range(-5_000..200_000)).collect();
        times.sort();
        let records: Vec<DecodedAisRecord> = times
            .iter()
            .map(|&t| {
                let id = rng.gen_range(0..6);
                record(t, id, codes[rng.gen_range(0..codes.len())], &mut rng)
            })
            .collect();
        let cfg = PairingConfig {
            max_skew_ms: rng.gen_range(0..3_000),
            keep_ambiguous: rng.gen(),
        };
        let out = pair_audio_with_ais(&records, &segments, &cfg).map_err(|e| format!("fixture {f}: {e}"))?;
        ensure(out.pairs.len() + out.report.total() == records.len(), || {
            format!(
                "fixture {f}: {} pairs + {} skipped != {} records",
                out.pairs.len(),
                out.report.total(),
                records.len()
            )
        })?;
        total_records += records.len();
    }

    for i in 0..CAPTION_SAMPLES {
        let r = record(0, 1, None, &mut rng);
        let category = QUERY_SET[i % QUERY_SET.len()];
        let caption = render_caption(&r, category, Granularity::Fine).map_err(|e| e.to_string())?;
        let back = parse_fine_caption(&caption).map_err(|e| format!("{caption:?}: {e}"))?;
        let at_resolution = |v: f64, places: usize| format!("{v:.places$}").parse::<f64>().unwrap();
        ensure(
            back.category == category
                && back.x == at_resolution(r.x, 4)
                && back.y == at_resolution(r.y, 4)
                && back.sog == r.sog
                && back.true_heading == r.true_heading,
            || format!("{caption:?} parsed as {back:?}"),
        )?;
    }

    // hand-made manifest: Cargo 3 rows (1000 + 2500 + 4000 ms), Tug 2 rows (60000 + 500 ms)
    let rows: Vec<AudioTextPair> = [("Cargo", 1000), ("Tug", 60_000), ("Cargo", 2500), ("Tug", 500), ("Cargo", 4000)]
        .iter()
        .enumerate()
        .map(|(i, &(cat, duration))| AudioTextPair {
            segment: AudioSegmentRef {
                file_path: format!("{i}.wav"),
                sample_rate: 16_000,
                start: i as i64 * 100_000,
                duration,
                hydrophone_id: "h".into(),
            },
            caption: cat.into(),
            category: cat.into(),
            granularity: Granularity::Coarse,
            source_record: record(0, i as u32, Some(70), &mut rng),
            split: Split::Train,
            corpus_id: "hand".into(),
        })
        .collect();
    let freqs = [Some(100.0), Some(300.0), Some(200.0), None, Some(400.0)];
    let stats = corpus_stats(&rows, &freqs, QuantileRule::default());
    let cargo = stats.get("Cargo").ok_or("no Cargo row")?;
    let tug = stats.get("Tug").ok_or("no Tug row")?;
    ensure(cargo.count == 3 && cargo.duration_ms == 7_500, || format!("Cargo {cargo:?}"))?;
    ensure(tug.count == 2 && tug.duration_ms == 60_500, || format!("Tug {tug:?}"))?;
    ensure(stats.total_pairs() == 5 && stats.total_duration_ms() == 68_000, || {
        format!("totals {} / {}", stats.total_pairs(), stats.total_duration_ms())
    })?;
    let cargo_hz = cargo.dominant_hz.as_ref().ok_or("no Cargo frequency summary")?;
    ensure(cargo_hz.min == 100.0 && cargo_hz.median == 200.0 && cargo_hz.max == 400.0, || {
        format!("Cargo frequencies {cargo_hz:?}")
    })?;
    Ok(format!(
        "{PAIRING_FIXTURES} fixtures ({total_records} records) conserve pairs + skipped; {CAPTION_SAMPLES} fine captions parse back at caption resolution; stats totals exact"
    ))
}

fn full_run(dir: &Path, cfg: &PipelineConfig) -> std::result::Result<(Vec<u8>, Vec<u8>), String> {
    let train_manifest = synth(&dir.join("train"), "toy-a", 5, 300, 316_000_000, cfg)?;
    let eval_manifest = synth(&dir.join("eval"), "toy-b", 3, 301, 317_000_000, cfg)?;
    let features = dir.join("features.bin");
    featurize_stage(&train_manifest, &features, cfg).map_err(|e| e.to_string())?;
    let ckpt = dir.join("ckpt.bin");
    train_stage(&train_manifest, &features, &ckpt, &dir.join("epochs.csv"), cfg, |_| {}).map_err(|e| e.to_string())?;
    let report = dir.join("report.json");
    let opts = EvalOptions {
        mode: EvalMode::ZeroShot,
        split: SplitFilter::All,
        prompt_set: PromptSet::Taxonomy,
    };
    eval_stage(&ckpt, &eval_manifest, None, &report, &opts).map_err(|e| e.to_string())?;
    let read = |p: &Path| std::fs::read(p).map_err(|e| e.to_string());
    Ok((read(&ckpt)?, read(&report)?))
}

fn criterion_8() -> Outcome {
    let mut cfg = PipelineConfig::toy();
    cfg.seed = 42;
    cfg.train.max_steps = Some(DETERMINISM_STEPS);
    let cfg = cfg.finalize();
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (ckpt_a, report_a) = full_run(a.path(), &cfg)?;
    let (ckpt_b, report_b) = full_run(b.path(), &cfg)?;
    ensure(ckpt_a == ckpt_b, || "checkpoints differ".into())?;
    ensure(report_a == report_b, || "reports differ".into())?;

    let mut other = cfg.clone();
    other.seed = 43;
    let c = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (ckpt_c, _) = full_run(c.path(), &other.finalize())?;
    ensure(ckpt_c != ckpt_a, || "a different seed gave the same checkpoint".into())?;
    Ok(format!(
        "two seed-42 runs: checkpoints ({} bytes) and reports ({} bytes) byte-identical; seed 43 differs",
        ckpt_a.len(),
        report_a.len()
    ))
}

fn main() {
    let criteria: [(u8, &str, fn() -> Outcome, Option<Duration>); 8] = [
        (1, "AIS round-trip", criterion_1, Some(AIS_LIMIT)),
        (2, "DSP shapes", criterion_2, Some(DSP_LIMIT)),
        (3, "LoRA contracts", criterion_3, None),
        (4, "loss correctness", criterion_4, Some(LOSS_LIMIT)),
        (5, "toy end-to-end", criterion_5, Some(TOY_LIMIT)),
        (6, "metric oracle", criterion_6, None),
        (7, "corpus conservation", criterion_7, None),
        (8, "determinism", criterion_8, None),
    ];
    let mut failed = 0;
    for (n, name, run, limit) in criteria {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let outcome = match (outcome, limit) {
            (Ok(_), Some(l)) if elapsed >= l => Err(format!("took {elapsed:.2?}, limit {l:?}")),
            (o, _) => o,
        };
        let budget = limit.map(|l| format!(" < {l:?}")).unwrap_or_default();
        match outcome {
            Ok(detail) => println!("PASS criterion {n} ({name}) [{elapsed:.2?}{budget}]: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {n} ({name}) [{elapsed:.2?}{budget}]: {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all 8 acceptance criteria passed");
}
