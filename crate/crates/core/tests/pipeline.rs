use std::path::Path;

use oceanforge::config::PipelineConfig;
use oceanforge::corpus::read_manifest;
use oceanforge::eval::EvalMode;
use oceanforge::pipeline::*;

fn corpus(dir: &Path, corpus_id: &str, per_class: usize, seed: u64, mmsi_base: u32) -> std::path::PathBuf {
    synth_corpus(
        dir,
        &SynthConfig {
            per_class,
            seed,
            mmsi_base,
            ..SynthConfig::default()
        },
    )
    .unwrap();
    let mut cfg = PipelineConfig::toy();
    cfg.corpus.corpus_id = corpus_id.into();
    synth_manifest(dir, &cfg).unwrap()
}

#[test]
fn synthetic_corpus_pairs_every_segment() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = corpus(dir.path(), "toy-a", 4, 1, 316_000_000);
    let rows = read_manifest(&manifest).unwrap();
    assert_eq!(rows.len(), 12);
    let counts = category_counts(&rows);
    assert_eq!(counts.values().copied().collect::<Vec<_>>(), vec![4, 4, 4]);
    assert!(counts.contains_key("Cargo") && counts.contains_key("Tanker") && counts.contains_key("Tug"));
    assert!(rows.iter().all(|r| r.caption == r.category));
}

#[test]
fn eval_refuses_mismatched_features() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = corpus(dir.path(), "toy-a", 2, 2, 316_000_000);
    let mut cfg = PipelineConfig::toy();
    cfg.train.max_steps = Some(2);
    featurize_stage(&manifest, &dir.path().join("f.bin"), &cfg).unwrap();
    let meta = train_stage(
        &manifest,
        &dir.path().join("f.bin"),
        &dir.path().join("ckpt.bin"),
        &dir.path().join("epochs.csv"),
        &cfg,
        |_| {},
    )
    .unwrap();
    assert_eq!(meta.steps, 2);

    let mut other = cfg.clone();
    other.dsp.profile = "imagebind128".into();
    featurize_stage(&manifest, &dir.path().join("g.bin"), &other).unwrap();
    let opts = EvalOptions {
        mode: EvalMode::Retrieval,
        split: SplitFilter::All,
        prompt_set: Default::default(),
    };
    let err = eval_stage(
        &dir.path().join("ckpt.bin"),
        &manifest,
        Some(&dir.path().join("g.bin")),
        &dir.path().join("r.json"),
        &opts,
    )
    .unwrap_err();
    assert!(matches!(err, PipelineError::ConfigHashMismatch { .. }), "{err}");

    let zs = EvalOptions {
        mode: EvalMode::ZeroShot,
        ..opts
    };
    let err = eval_stage(&dir.path().join("ckpt.bin"), &manifest, None, &dir.path().join("r.json"), &zs).unwrap_err();
    assert!(err.to_string().contains("disjoint"), "{err}");

    let csv = std::fs::read_to_string(dir.path().join("epochs.csv")).unwrap();
    assert!(csv.starts_with("epoch,loss,lr,tau\n"));
}
