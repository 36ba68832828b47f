//! Log-mel spectrograms and spectrogram patching.

mod config;
mod mel;
mod patches;
mod stft;

pub use config::DspConfig;
pub use mel::{dominant_frequency, hz_to_mel, log_mel, mel_filterbank, mel_to_hz, MelFilterbank, MelSpectrogram};
pub use patches::{extract_patches, patch_count, PatchSequence};
pub use stft::{hann_window, stft_magnitude};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DspError {
    #[error("empty signal")]
    EmptySignal,
    #[error("signal contains non-finite samples")]
    NonFiniteSignal,
    #[error("sample rate {got} Hz does not match configured {expected} Hz")]
    SampleRateMismatch { expected: u32, got: u32 },
    #[error("invalid band edges: {0}")]
    InvalidBandEdges(String),
    #[error("invalid DSP config: {0}")]
    InvalidConfig(String),
    #[error("patch {patch} larger than input {height}x{width}")]
    PatchLargerThanInput {
        patch: usize,
        height: usize,
        width: usize,
    },
}

pub type Result<T> = std::result::Result<T, DspError>;
