//! `oceanforge` command line: decode, build, featurize, train, eval, stats,
//! selftest and synth.
//!
//! Exit codes: 0 success, 1 bad input or usage, 2 internal failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use oceanforge::config::PipelineConfig;
use oceanforge::corpus::{Granularity, QuantileRule};
use oceanforge::eval::{EvalMode, PromptSet};
use oceanforge::pipeline::{self, EvalOptions, PipelineError, SplitFilter, SynthConfig};
use oceanforge::selftest::run_selftest;

#[derive(Parser)]
#[command(name = "oceanforge", version, about = "Underwater acoustic target recognition pipeline")]
struct Cli {
    /// Pipeline configuration (TOML). Flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for initialization, batch order and splits (overrides OCEANFORGE_SEED).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for featurization and embedding.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decode an AIS feed into JSONL records.
    Decode {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Salt for MMSI anonymization.
        #[arg(long)]
        salt: Option<String>,
    },
    /// Pair AIS records with audio segments and write a caption manifest.
    Build(BuildArgs),
    /// Compute log-mel features for every segment of a manifest.
    Featurize {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// `default`, `imagebind128` or `toy`.
        #[arg(long)]
        profile: Option<String>,
    },
    /// Train the dual encoder on the train split of a manifest.
    Train(TrainArgs),
    /// Retrieval or zero-shot evaluation of a checkpoint.
    Eval(EvalArgs),
    /// Per-category corpus statistics as CSV.
    Stats {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Skip reading audio (no dominant-frequency summaries).
        #[arg(long)]
        no_audio: bool,
        #[arg(long, value_parser = parse_rule)]
        quantile_rule: Option<QuantileRule>,
    },
    /// Run the built-in property checks.
    Selftest,
    /// Write a synthetic three-class corpus (AIS feed, WAVs, audio index).
    Synth {
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 20)]
        per_class: usize,
        #[arg(long, default_value_t = 2.0)]
        seconds: f64,
        #[arg(long, default_value_t = 316_000_000)]
        mmsi_base: u32,
    },
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long)]
    ais: PathBuf,
    #[arg(long)]
    audio: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// `coarse`, `fine` or `both`.
    #[arg(long)]
    granularity: Option<String>,
    #[arg(long)]
    corpus_id: Option<String>,
    #[arg(long)]
    eval_fraction: Option<f64>,
    #[arg(long)]
    max_skew_ms: Option<i64>,
    #[arg(long)]
    keep_ambiguous: bool,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Per-epoch CSV (epoch, loss, lr, tau); defaults to `<out>.epochs.csv`.
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    max_steps: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    /// Print every epoch to stderr.
    #[arg(long)]
    verbose: bool,
}

#[derive(Args)]
struct EvalArgs {
    /// `retrieval`, `zeroshot` or `supervised`.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    ckpt: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Precomputed features; must match the checkpoint's DSP settings.
    #[arg(long)]
    features: Option<PathBuf>,
    /// `train`, `eval` or `all`; defaults to `all` for zero-shot, else `eval`.
    #[arg(long)]
    split: Option<String>,
    /// `taxonomy` (all queries) or `label_space` (queries present in the test set).
    #[arg(long)]
    prompt_set: Option<String>,
}

fn parse_rule(s: &str) -> Result<QuantileRule, String> {
    match s {
        "type6" => Ok(QuantileRule::Type6),
        "type7" => Ok(QuantileRule::Type7),
        other => Err(format!("unknown quantile rule {other:?}")),
    }
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        Self {
            code: if e.is_input_error() { 1 } else { 2 },
            message: e.to_string(),
        }
    }
}

fn input_error(message: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        message: message.into(),
    }
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, Failure> {
    let base = match &cli.config {
        Some(path) => PipelineConfig::load(path).map_err(|e| input_error(e.to_string()))?,
        None => PipelineConfig::default(),
    };
    let mut cfg = base.with_env().map_err(|e| input_error(e.to_string()))?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg.finalize())
}

fn validated(cfg: PipelineConfig) -> Result<PipelineConfig, Failure> {
    let cfg = cfg.finalize();
    cfg.validate().map_err(|e| input_error(e.to_string()))?;
    Ok(cfg)
}

fn parse_granularity(s: &str) -> Result<Vec<Granularity>, Failure> {
    match s {
        "both" => Ok(vec![Granularity::Coarse, Granularity::Fine]),
        other => other.parse().map(|g| vec![g]).map_err(input_error),
    }
}

fn default_log_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".epochs.csv");
    out.with_file_name(name)
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .map_err(|e| Failure {
                code: 2,
                message: e.to_string(),
            })?;
    }
    let mut cfg = load_config(&cli)?;
    match cli.command {
        Command::Decode { input, out, salt } => {
            if let Some(salt) = salt {
                cfg.ais.salt = salt;
            }
            let s = pipeline::decode_stage(&input, &out, &validated(cfg)?)?;
            println!(
                "decoded {} records ({} static reports, {} rejected lines) -> {}",
                s.records,
                s.static_reports,
                s.rejected,
                out.display()
            );
            for example in &s.rejected_examples {
                eprintln!("rejected {example}");
            }
        }
        Command::Build(a) => {
            if let Some(g) = &a.granularity {
                cfg.corpus.granularities = parse_granularity(g)?;
            }
            if let Some(id) = a.corpus_id {
                cfg.corpus.corpus_id = id;
            }
            if let Some(f) = a.eval_fraction {
                cfg.corpus.eval_fraction = f;
            }
            if let Some(ms) = a.max_skew_ms {
                cfg.corpus.pairing.max_skew_ms = ms;
            }
            if a.keep_ambiguous {
                cfg.corpus.pairing.keep_ambiguous = true;
            }
            let s = pipeline::build_stage(&a.ais, &a.audio, &a.out, &validated(cfg)?)?;
            println!(
                "{} records -> {} paired, {} manifest rows; skipped: {} indeterminate, {} no segment, {} ambiguous, {} duplicate",
                s.records,
                s.paired,
                s.rows,
                s.skipped.indeterminate,
                s.skipped.no_segment,
                s.skipped.ambiguous,
                s.skipped.duplicate
            );
        }
        Command::Featurize { manifest, out, profile } => {
            if let Some(p) = profile {
                cfg.dsp.profile = p;
                cfg.dsp.custom = None;
            }
            let n = pipeline::featurize_stage(&manifest, &out, &validated(cfg)?)?;
            println!("featurized {n} segments -> {}", out.display());
        }
        Command::Train(a) => {
            if let Some(e) = a.epochs {
                cfg.train.epochs = e;
            }
            if a.max_steps.is_some() {
                cfg.train.max_steps = a.max_steps;
            }
            if let Some(b) = a.batch_size {
                cfg.train.batch_size = b;
            }
            if let Some(lr) = a.lr {
                cfg.train.base_lr = lr;
            }
            let log = a.log.unwrap_or_else(|| default_log_path(&a.out));
            let verbose = a.verbose;
            let meta = pipeline::train_stage(&a.manifest, &a.features, &a.out, &log, &validated(cfg)?, |e| {
                if verbose {
                    eprintln!("epoch {} step {} loss {:.5} lr {:.3e} tau {:.4}", e.epoch, e.steps, e.mean_loss, e.lr, e.tau);
                }
            })?;
            let last = meta.epochs.last();
            println!(
                "trained {} steps on {} pairs; final loss {:.5}, tau {:.4} -> {}",
                meta.steps,
                meta.n_examples,
                last.map_or(f64::NAN, |e| e.mean_loss),
                last.map_or(f64::NAN, |e| e.tau),
                a.out.display()
            );
        }
        Command::Eval(a) => {
            let mode: EvalMode = match &a.mode {
                Some(m) => m.parse().map_err(|e: oceanforge::eval::EvalError| input_error(e.to_string()))?,
                None => cfg.eval.mode,
            };
            let prompt_set: PromptSet = match &a.prompt_set {
                Some(p) => p.parse().map_err(|e: oceanforge::eval::EvalError| input_error(e.to_string()))?,
                None => cfg.eval.prompt_set,
            };
            let split = match &a.split {
                Some(s) => s.parse().map_err(input_error)?,
                None => SplitFilter::default_for(mode),
            };
            let opts = EvalOptions { mode, split, prompt_set };
            let out = pipeline::eval_stage(&a.ckpt, &a.manifest, a.features.as_deref(), &a.out, &opts)?;
            let r = &out.report;
            println!(
                "{}: R@1 {:.2} R@3 {:.2} R@5 {:.2} top1 {:.2} over {} queries, {} prompts -> {}",
                mode,
                r.r1,
                r.r3,
                r.r5,
                r.top1,
                r.n_queries,
                r.prompts.len(),
                a.out.display()
            );
        }
        Command::Stats {
            manifest,
            out,
            no_audio,
            quantile_rule,
        } => {
            if let Some(rule) = quantile_rule {
                cfg.corpus.quantile_rule = rule;
            }
            let report = pipeline::stats_stage(&manifest, &out, !no_audio, &validated(cfg)?)?;
            println!(
                "{} categories, {} pairs, {:.3} h -> {}",
                report.categories.len(),
                report.total_pairs(),
                report.total_duration_ms() as f64 / 3_600_000.0,
                out.display()
            );
        }
        Command::Selftest => {
            let results = run_selftest();
            let failed = results.iter().filter(|c| !c.passed).count();
            for c in &results {
                println!("{} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
            }
            if failed > 0 {
                return Err(Failure {
                    code: 2,
                    message: format!("{failed} self-checks failed"),
                });
            }
        }
        Command::Synth {
            out_dir,
            per_class,
            seconds,
            mmsi_base,
        } => {
            let s = pipeline::synth_corpus(
                &out_dir,
                &SynthConfig {
                    per_class,
                    seconds,
                    mmsi_base,
                    seed: cfg.seed,
                    ..SynthConfig::default()
                },
            )?;
            println!(
                "wrote {} segments: {} and {}",
                s.segments,
                s.feed.display(),
                s.audio_index.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(f)) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
        Err(_) => ExitCode::from(2),
    }
}
