//! Synthetic vessel recordings for smoke tests and the toy experiment:
//! each class is a narrow tone band plus broadband noise.

use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::{Distribution, Normal};

/// A synthetic class: category name, AIS ship-type code and tone-band centre.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyClass {
    pub category: &'static str,
    pub ship_type: u8,
    pub band_hz: f64,
}

pub const TOY_CLASSES: [ToyClass; 3] = [
    ToyClass {
        category: "Cargo",
        ship_type: 70,
        band_hz: 500.0,
    },
    ToyClass {
        category: "Tanker",
        ship_type: 80,
        band_hz: 1500.0,
    },
    ToyClass {
        category: "Tug",
        ship_type: 52,
        band_hz: 3000.0,
    },
];

/// Relative half-width of a class tone band.
pub const BAND_SPREAD: f64 = 0.05;

/// `seconds` of audio: two tones drawn inside `band_hz * (1 +- BAND_SPREAD)`
/// with random phase and level, over white Gaussian noise.
pub fn tone_band_clip<R: Rng>(rng: &mut R, band_hz: f64, seconds: f64, sample_rate: u32, noise_std: f64) -> Vec<f64> {
    let n = (seconds * sample_rate as f64).round() as usize;
    let tones: Vec<(f64, f64, f64)> = (0..2)
        .map(|_| {
            let f = band_hz * (1.0 + rng.gen_range(-BAND_SPREAD..BAND_SPREAD));
            (f, rng.gen_range(0.2..0.5), rng.gen_range(0.0..TAU))
        })
        .collect();
    let gain = rng.gen_range(0.5..1.5);
    let noise = Normal::new(0.0, noise_std).expect("finite std");
    (0..n)
        .map(|i| {
            let t = i as f64 / sample_rate as f64;
            let tone: f64 = tones.iter().map(|(f, a, p)| a * (TAU * f * t + p).sin()).sum();
            gain * tone + noise.sample(rng)
        })
        .collect()
}
