//! Fast in-process property checks over every stage, run by `oceanforge selftest`.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::ais::{
    decode_feed, decode_position_report, decode_sixbit, encode_position_report, encode_sixbit, DecodedAisRecord,
    PositionReport, HEADING_UNAVAILABLE,
};
use crate::corpus::{
    pair_audio_with_ais, parse_fine_caption, render_caption, AudioSegmentRef, Granularity, PairingConfig, QUERY_SET,
};
use crate::dsp::{log_mel, patch_count, stft_magnitude, DspConfig};
use crate::eval::{recall_at_k, SimilarityMatrix};
use crate::model::{BpeVocab, DualEncoder, ModelConfig};
use crate::train::{check_model_gradients, contrastive_loss, train, Example, LossOptions, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelfCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ais_round_trip() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 2000;
    for i in 0..n {
        let report = PositionReport {
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
            true_heading: rng.gen_range(0..=359),
            utc_second: rng.gen_range(0..=59),
        };
        let bits = encode_position_report(&report).map_err(|e| e.to_string())?;
        let back = decode_sixbit(&encode_sixbit(&bits).0)
            .and_then(|b| decode_position_report(&b))
            .map_err(|e| format!("report {i}: {e}"))?;
        ensure(back == report, || format!("report {i} changed"))?;
    }
    Ok(format!("{n} reports"))
}

fn ais_fixture() -> Check {
    let report = PositionReport {
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
    let payload = encode_sixbit(&encode_position_report(&report).map_err(|e| e.to_string())?).0;
    let feed = decode_feed(format!("{payload}\t20240101T000000.000Z").as_bytes(), b"selftest").map_err(|e| e.to_string())?;
    let r = feed.records.first().ok_or("no record")?;
    ensure(
        (r.x + 123.4514).abs() < 1e-4 && (r.y - 48.7697).abs() < 1e-4 && r.cog == 18.6 && r.true_heading == 285,
        || format!("{r:?}"),
    )?;
    Ok(format!("x={:.4} y={:.4}", r.x, r.y))
}

fn dsp_shapes() -> Check {
    let cfg = DspConfig::default();
    let sine: Vec<f64> = (0..80_000)
        .map(|n| (2.0 * std::f64::consts::PI * 1000.0 * n as f64 / 16_000.0).sin())
        .collect();
    let mel = log_mel(&sine, 16_000, &cfg).map_err(|e| e.to_string())?;
    ensure(mel.values.dim() == (1024, 64), || format!("{:?}", mel.values.dim()))?;
    let mag = stft_magnitude(&sine, &cfg).map_err(|e| e.to_string())?;
    let mid = mag.row(mag.nrows() / 2);
    let peak = mid.iter().enumerate().fold((0, f64::MIN), |b, (i, &v)| if v > b.1 { (i, v) } else { b }).0;
    ensure(peak == 64, || format!("peak bin {peak}"))?;
    let counts = (
        patch_count(1024, 64, 16, 10).map_err(|e| e.to_string())?,
        patch_count(1024, 64, 16, 16).map_err(|e| e.to_string())?,
    );
    ensure(counts == (505, 256), || format!("{counts:?}"))?;
    Ok("(1024, 64), bin 64, 505/256 patches".into())
}

fn tiny_model(seed: u64) -> Result<(DualEncoder, Vec<Example>), String> {
    let config = ModelConfig {
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
    };
    let captions = ["cargo", "tanker", "tug", "fishing"];
    let vocab = BpeVocab::train(&captions, 300, 16).map_err(|e| e.to_string())?;
    let model = DualEncoder::new(config, vocab, (8, 8), seed).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let examples = captions
        .iter()
        .map(|c| {
            let spec = Array2::from_shape_fn((8, 8), |_| rng.gen_range(-8.0..0.0));
            Ok(Example {
                patches: model.patches_of(&spec).map_err(|e| e.to_string())?,
                tokens: model.vocab().encode(c),
            })
        })
        .collect::<Result<Vec<_>, String>>()?;
    Ok((model, examples))
}

fn lora_identity() -> Check {
    let (model, examples) = tiny_model(3)?;
    for ex in &examples {
        let a = model.embed_patches(&ex.patches).map_err(|e| e.to_string())?;
        let b = model.embed_patches_frozen(&ex.patches).map_err(|e| e.to_string())?;
        ensure(a == b, || "zero-B forward differs".into())?;
    }
    Ok("zero-B forward equals frozen forward".into())
}

fn loss_and_gradients() -> Check {
    let uniform = Array2::from_elem((4, 8), 1.0);
    let l = contrastive_loss(&uniform, &uniform, 0.07, LossOptions::default()).map_err(|e| e.to_string())?;
    ensure(l == 4f64.ln(), || format!("uniform loss {l}"))?;
    let (mut model, examples) = tiny_model(4)?;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for id in model.store().trainable() {
        model.store_mut().value_mut(id).mapv_inplace(|v| v + rng.gen_range(-0.2..0.2));
    }
    let batch: Vec<&Example> = examples.iter().collect();
    let err = check_model_gradients(&mut model, &batch, 1e-5, 3, 5).map_err(|e| e.to_string())?;
    ensure(err < 1e-4, || format!("gradient error {err:e}"))?;
    Ok(format!("ln 4 exact, gradient rel err {err:.1e}"))
}

fn training_determinism() -> Check {
    let cfg = TrainConfig {
        batch_size: 2,
        epochs: 20,
        base_lr: 1e-2,
        seed: 9,
        ..TrainConfig::default()
    };
    let (mut a, ex) = tiny_model(6)?;
    let (mut b, _) = tiny_model(6)?;
    let checksum = a.store().frozen_checksum();
    train(&mut a, &ex, &cfg, |_| {}).map_err(|e| e.to_string())?;
    train(&mut b, &ex, &cfg, |_| {}).map_err(|e| e.to_string())?;
    ensure(a.store() == b.store(), || "runs diverged".into())?;
    ensure(a.store().frozen_checksum() == checksum, || "frozen weights changed".into())?;
    Ok("identical parameters, frozen weights intact".into())
}

fn recall_properties() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for m in 0..200 {
        let (q, t) = (rng.gen_range(1..=12), rng.gen_range(1..=12));
        let scores = Array2::from_shape_fn((q, t), |_| f64::from(rng.gen_range(-2i32..=2)) / 2.0);
        let truth = (0..q).map(|_| Some(rng.gen_range(0..t))).collect();
        let sim = SimilarityMatrix {
            scores: scores.clone(),
            query_ids: vec![String::new(); q],
            target_ids: vec![String::new(); t],
            truth,
        };
        let r = recall_at_k(&sim, &[1, 3, 5]).map_err(|e| e.to_string())?;
        ensure(r[0] <= r[1] && r[1] <= r[2], || format!("matrix {m}: {r:?}"))?;
        let shifted = SimilarityMatrix {
            scores: scores.mapv(|v| 3.0 * v + 1.0),
            ..sim
        };
        ensure(recall_at_k(&shifted, &[1, 3, 5]).map_err(|e| e.to_string())? == r, || {
            format!("matrix {m}: not rank-invariant")
        })?;
    }
    Ok("monotone and rank-invariant on 200 tie-rich matrices".into())
}

fn corpus_properties() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let segments: Vec<AudioSegmentRef> = (0..10)
        .map(|i| AudioSegmentRef {
            file_path: format!("{i}.wav"),
            sample_rate: 16_000,
            start: i * 10_000,
            duration: 5_000,
            hydrophone_id: "h".into(),
        })
        .collect();
    let mut records: Vec<DecodedAisRecord> = (0..100)
        .map(|_| DecodedAisRecord {
            x: f64::from(rng.gen_range(-108_000_000..=108_000_000)) / 600_000.0,
            y: f64::from(rng.gen_range(-54_000_000..=54_000_000)) / 600_000.0,
            sog: f64::from(rng.gen_range(0u16..=1022)) / 10.0,
            cog: 0.0,
            true_heading: if rng.gen_bool(0.2) { HEADING_UNAVAILABLE } else { rng.gen_range(0..360) },
            ais_timestamp: rng.gen_range(0..100_000),
            id: rng.gen_range(0..4),
            msg_type: 1,
            ship_type_code: [Some(70), Some(52), Some(0), None][rng.gen_range(0..4)],
        })
        .collect();
    records.sort_by_key(|r| r.ais_timestamp);
    let out = pair_audio_with_ais(&records, &segments, &PairingConfig::default()).map_err(|e| e.to_string())?;
    ensure(out.pairs.len() + out.report.total() == records.len(), || "records lost".into())?;
    for (i, r) in records.iter().enumerate() {
        let cat = QUERY_SET[i % QUERY_SET.len()];
        let caption = render_caption(r, cat, Granularity::Fine).map_err(|e| e.to_string())?;
        let back = parse_fine_caption(&caption).map_err(|e| e.to_string())?;
        ensure(back.category == cat && back.true_heading == r.true_heading && back.sog == r.sog, || caption.clone())?;
    }
    Ok(format!("{} pairs + {} skipped = {} records", out.pairs.len(), out.report.total(), records.len()))
}

/// Run every check; a panic inside a check counts as a failure.
pub fn run_selftest() -> Vec<SelfCheck> {
    let checks: [(&'static str, fn() -> Check); 8] = [
        ("ais round trip", ais_round_trip),
        ("ais fixture", ais_fixture),
        ("dsp shapes", dsp_shapes),
        ("lora identity", lora_identity),
        ("loss and gradients", loss_and_gradients),
        ("training determinism", training_determinism),
        ("recall properties", recall_properties),
        ("corpus properties", corpus_properties),
    ];
    checks
        .into_iter()
        .map(|(name, check)| {
            let result = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
            match result {
                Ok(detail) => SelfCheck {
                    name,
                    passed: true,
                    detail,
                },
                Err(detail) => SelfCheck {
                    name,
                    passed: false,
                    detail,
                },
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    #[test]
    fn all_checks_pass() {
        for check in super::run_selftest() {
            assert!(check.passed, "{}: {}", check.name, check.detail);
        }
    }
}
