use ndarray::{Array1, Array2, Axis};

use super::stft::stft_magnitude;
use super::{DspConfig, DspError, Result};

/// HTK mel scale.
pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filters, n_mels x n_bins, plus the band centers in Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct MelFilterbank {
    pub weights: Array2<f64>,
    pub centers_hz: Vec<f64>,
}

/// Build triangular filters with centers uniform on the mel scale.
///
/// A band narrower than the FFT bin spacing would sample to all zeros; such
/// a band gets unit weight on the bin nearest its center instead.
pub fn mel_filterbank(config: &DspConfig) -> Result<MelFilterbank> {
    config.validate()?;
    let n_bins = config.n_bins();
    let (lo, hi) = (hz_to_mel(config.fmin), hz_to_mel(config.fmax));
    let edges: Vec<f64> = (0..config.n_mels + 2)
        .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / (config.n_mels + 1) as f64))
        .collect();
    if edges.windows(2).any(|w| w[1] <= w[0]) {
        return Err(DspError::InvalidBandEdges("non-increasing mel edges".into()));
    }
    let bin_hz = f64::from(config.sample_rate) / config.win_length as f64;

    let mut weights = Array2::zeros((config.n_mels, n_bins));
    for m in 0..config.n_mels {
        let (left, center, right) = (edges[m], edges[m + 1], edges[m + 2]);
        let mut row = weights.row_mut(m);
        for k in 0..n_bins {
            let f = k as f64 * bin_hz;
            let rise = (f - left) / (center - left);
            let fall = (right - f) / (right - center);
            row[k] = rise.min(fall).max(0.0);
        }
        if row.iter().all(|&w| w == 0.0) {
            let k = ((center / bin_hz).round() as usize).min(n_bins - 1);
            row[k] = 1.0;
        }
    }
    Ok(MelFilterbank {
        weights,
        centers_hz: edges[1..=config.n_mels].to_vec(),
    })
}

/// Log-mel spectrogram, frames x mel bins.
#[derive(Debug, Clone, PartialEq)]
pub struct MelSpectrogram {
    pub values: Array2<f64>,
    /// Frames computed from audio; the rest are padding.
    pub real_frames: usize,
}

impl MelSpectrogram {
    pub fn frames(&self) -> usize {
        self.values.nrows()
    }

    pub fn mel_bins(&self) -> usize {
        self.values.ncols()
    }

    /// `true` for frames backed by audio.
    pub fn padding_mask(&self) -> Vec<bool> {
        (0..self.frames()).map(|t| t < self.real_frames).collect()
    }
}

fn mel_power(samples: &[f64], config: &DspConfig, fb: &MelFilterbank) -> Result<Array2<f64>> {
    let mag = stft_magnitude(samples, config)?;
    let power = mag.mapv(|m| m * m);
    Ok(power.dot(&fb.weights.t()))
}

/// `ln(mel_fb . |STFT|^2 + floor)`, padded or truncated to `target_frames`.
/// Padding frames hold zero power, i.e. `ln(floor)`.
pub fn log_mel(samples: &[f64], sample_rate: u32, config: &DspConfig) -> Result<MelSpectrogram> {
    if sample_rate != config.sample_rate {
        return Err(DspError::SampleRateMismatch {
            expected: config.sample_rate,
            got: sample_rate,
        });
    }
    let fb = mel_filterbank(config)?;
    let mel = mel_power(samples, config, &fb)?;
    let real_frames = mel.nrows().min(config.target_frames);
    let floor_log = config.log_floor.ln();
    let mut values = Array2::from_elem((config.target_frames, config.n_mels), floor_log);
    for t in 0..real_frames {
        for (dst, &p) in values.row_mut(t).iter_mut().zip(mel.row(t)) {
            *dst = (p + config.log_floor).ln();
        }
    }
    Ok(MelSpectrogram {
        values,
        real_frames,
    })
}

/// Center frequency of the mel band with the most average power.
pub fn dominant_frequency(samples: &[f64], sample_rate: u32, config: &DspConfig) -> Result<f64> {
    if sample_rate != config.sample_rate {
        return Err(DspError::SampleRateMismatch {
            expected: config.sample_rate,
            got: sample_rate,
        });
    }
    let fb = mel_filterbank(config)?;
    let mel = mel_power(samples, config, &fb)?;
    let mean: Array1<f64> = mel.mean_axis(Axis(0)).expect("at least one frame");
    let band = mean
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i)
        .expect("n_mels > 0");
    Ok(fb.centers_hz[band])
}
