use serde::{Deserialize, Serialize};

use super::{DspError, Result};

/// Framing and filterbank parameters for log-mel extraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DspConfig {
    pub sample_rate: u32,
    /// Window and FFT length in samples.
    pub win_length: usize,
    pub hop: usize,
    pub n_mels: usize,
    /// Output frame count; shorter inputs are padded, longer truncated.
    pub target_frames: usize,
    pub fmin: f64,
    pub fmax: f64,
    pub log_floor: f64,
}

impl Default for DspConfig {
    fn default() -> Self {
        Self {
            sample_rate: 16_000,
            win_length: 1024,
            hop: 240,
            n_mels: 64,
            target_frames: 1024,
            fmin: 0.0,
            fmax: 8000.0,
            log_floor: 1e-10,
        }
    }
}

impl DspConfig {
    /// 128 mel bins, the audio front end of the larger backbone.
    pub fn imagebind128() -> Self {
        Self {
            n_mels: 128,
            ..Self::default()
        }
    }

    /// Short-clip profile for desk experiments: 128 frames (about 1.9 s).
    pub fn toy() -> Self {
        Self {
            target_frames: 128,
            ..Self::default()
        }
    }

    pub fn profile(name: &str) -> Option<Self> {
        match name {
            "default" => Some(Self::default()),
            "imagebind128" => Some(Self::imagebind128()),
            "toy" => Some(Self::toy()),
            _ => None,
        }
    }

    pub fn n_bins(&self) -> usize {
        self.win_length / 2 + 1
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(DspError::InvalidConfig(m));
        if self.sample_rate == 0 || self.win_length < 2 || self.hop == 0 || self.target_frames == 0 {
            return bad("zero-sized parameter".into());
        }
        if self.hop > self.win_length {
            return bad(format!("hop {} exceeds window {}", self.hop, self.win_length));
        }
        if self.n_mels == 0 || self.n_mels >= self.n_bins() {
            return bad(format!("n_mels {} must be in 1..{}", self.n_mels, self.n_bins()));
        }
        if !(self.fmin >= 0.0 && self.fmin < self.fmax) {
            return Err(DspError::InvalidBandEdges(format!(
                "fmin {} must be below fmax {}",
                self.fmin, self.fmax
            )));
        }
        if self.fmax > f64::from(self.sample_rate) / 2.0 {
            return Err(DspError::InvalidBandEdges(format!(
                "fmax {} above Nyquist",
                self.fmax
            )));
        }
        if !(self.log_floor > 0.0 && self.log_floor.is_finite()) {
            return bad("log_floor must be positive".into());
        }
        Ok(())
    }

    /// Real (unpadded) frame count for `n_samples` with centered framing.
    pub fn frames_for(&self, n_samples: usize) -> usize {
        1 + n_samples / self.hop
    }
}
