//! Whole-pipeline configuration, read from TOML.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{Granularity, PairingConfig, QuantileRule};
use crate::dsp::DspConfig;
use crate::eval::{EvalMode, PromptSet};
use crate::model::ModelConfig;
use crate::train::TrainConfig;

/// Environment variable that replaces the configured seed.
pub const SEED_ENV: &str = "OCEANFORGE_SEED";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: String, source: toml::de::Error },
    #[error("{SEED_ENV}={0:?} is not an unsigned integer")]
    BadSeedEnv(String),
    #[error("unknown DSP profile {0:?}")]
    UnknownProfile(String),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AisSection {
    /// Salt for MMSI anonymization.
    pub salt: String,
}

impl Default for AisSection {
    fn default() -> Self {
        Self {
            salt: "oceanforge".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSection {
    pub corpus_id: String,
    pub granularities: Vec<Granularity>,
    pub eval_fraction: f64,
    pub pairing: PairingConfig,
    pub quantile_rule: QuantileRule,
}

impl Default for CorpusSection {
    fn default() -> Self {
        Self {
            corpus_id: "onc".into(),
            granularities: vec![Granularity::Coarse, Granularity::Fine],
            eval_fraction: 0.2,
            pairing: PairingConfig::default(),
            quantile_rule: QuantileRule::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DspSection {
    /// Named preset: `default`, `imagebind128` or `toy`.
    pub profile: String,
    /// Explicit parameters, replacing the preset.
    pub custom: Option<DspConfig>,
}

impl Default for DspSection {
    fn default() -> Self {
        Self {
            profile: "default".into(),
            custom: None,
        }
    }
}

impl DspSection {
    pub fn resolve(&self) -> Result<DspConfig, ConfigError> {
        let cfg = match &self.custom {
            Some(c) => c.clone(),
            None => DspConfig::profile(&self.profile).ok_or_else(|| ConfigError::UnknownProfile(self.profile.clone()))?,
        };
        cfg.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub mode: EvalMode,
    pub prompt_set: PromptSet,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            mode: EvalMode::Retrieval,
            prompt_set: PromptSet::Taxonomy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Drives model initialization, batch order and the train/eval split.
    pub seed: u64,
    pub ais: AisSection,
    pub corpus: CorpusSection,
    pub dsp: DspSection,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub eval: EvalSection,
}

impl PipelineConfig {
    pub fn from_toml(text: &str, path: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|source| ConfigError::Parse {
            path: path.to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let name = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: name.clone(),
            source,
        })?;
        Self::from_toml(&text, &name)
    }

    /// Small setup for the synthetic three-class corpus: 2 s clips at the
    /// `toy` DSP profile, coarse captions, no held-out split, 500 steps.
    pub fn toy() -> Self {
        Self {
            corpus: CorpusSection {
                corpus_id: "toy-a".into(),
                granularities: vec![Granularity::Coarse],
                eval_fraction: 0.0,
                ..CorpusSection::default()
            },
            dsp: DspSection {
                profile: "toy".into(),
                custom: None,
            },
            train: TrainConfig {
                batch_size: 8,
                epochs: 1000,
                max_steps: Some(500),
                base_lr: 1e-3,
                ..TrainConfig::default()
            },
            eval: EvalSection {
                mode: EvalMode::ZeroShot,
                prompt_set: PromptSet::LabelSpace,
            },
            ..Self::default()
        }
    }

    /// Apply `OCEANFORGE_SEED` if set, and copy the seed into the trainer.
    pub fn with_env(mut self) -> Result<Self, ConfigError> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            self.seed = v.trim().parse().map_err(|_| ConfigError::BadSeedEnv(v))?;
        }
        Ok(self.finalize())
    }

    /// Propagate the global seed to the stages that consume it.
    pub fn finalize(mut self) -> Self {
        self.train.seed = self.seed;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.dsp.resolve()?;
        self.model.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.train.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if !(0.0..=1.0).contains(&self.corpus.eval_fraction) {
            return Err(ConfigError::Invalid(format!("eval_fraction {}", self.corpus.eval_fraction)));
        }
        if self.corpus.granularities.is_empty() {
            return Err(ConfigError::Invalid("no caption granularity selected".into()));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        hash_json(self)
    }
}

/// Hex SHA-256 of a value's JSON serialization.
pub fn hash_json<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_vec(value).expect("config types serialize");
    hex::encode(Sha256::digest(json))
}
