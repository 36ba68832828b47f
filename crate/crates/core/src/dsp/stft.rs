use std::f64::consts::PI;

use ndarray::Array2;
use rustfft::{num_complex::Complex, FftPlanner};

use super::{DspConfig, DspError, Result};

/// Periodic Hann window.
pub fn hann_window(len: usize) -> Vec<f64> {
    (0..len)
        .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos())
        .collect()
}

fn reflect_index(i: isize, len: usize) -> usize {
    if len == 1 {
        return 0;
    }
    let period = 2 * (len as isize - 1);
    let m = i.rem_euclid(period);
    if m >= len as isize {
        (period - m) as usize
    } else {
        m as usize
    }
}

/// Magnitude STFT, frames x (win_length / 2 + 1).
///
/// Frames are centered: the signal is reflect-padded by half a window on
/// both sides, giving `1 + len / hop` frames.
pub fn stft_magnitude(samples: &[f64], config: &DspConfig) -> Result<Array2<f64>> {
    if samples.is_empty() {
        return Err(DspError::EmptySignal);
    }
    if samples.iter().any(|s| !s.is_finite()) {
        return Err(DspError::NonFiniteSignal);
    }
    let n_fft = config.win_length;
    let half = (n_fft / 2) as isize;
    let n_frames = config.frames_for(samples.len());
    let window = hann_window(n_fft);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n_fft);

    let mut out = Array2::zeros((n_frames, config.n_bins()));
    let mut buf = vec![Complex::new(0.0, 0.0); n_fft];
    for f in 0..n_frames {
        let origin = (f * config.hop) as isize - half;
        for (n, slot) in buf.iter_mut().enumerate() {
            let x = samples[reflect_index(origin + n as isize, samples.len())];
            *slot = Complex::new(x * window[n], 0.0);
        }
        fft.process(&mut buf);
        for (k, v) in out.row_mut(f).iter_mut().enumerate() {
            *v = buf[k].norm();
        }
    }
    Ok(out)
}
