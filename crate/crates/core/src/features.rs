//! Binary feature store: a fixed header `{T, F, count}`, a JSON block naming
//! the segments and the DSP configuration, then `count` row-major T x F
//! matrices of little-endian f32.

use std::collections::HashMap;
use std::io::{Read, Write};

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsp::DspConfig;

pub const FEATURES_MAGIC: &[u8; 8] = b"OFFEAT\0\x01";

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("not a feature file")]
    BadMagic,
    #[error("feature header: {0}")]
    Header(#[from] serde_json::Error),
    #[error("feature shape mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMeta {
    pub dsp: DspConfig,
    pub dsp_hash: String,
    pub config_hash: String,
    pub segment_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    pub meta: FeatureMeta,
    pub spectrograms: Vec<Array2<f64>>,
}

impl FeatureSet {
    pub fn shape(&self) -> (usize, usize) {
        (self.meta.dsp.target_frames, self.meta.dsp.n_mels)
    }

    pub fn index(&self) -> HashMap<&str, usize> {
        self.meta
            .segment_ids
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect()
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<(), FeatureError> {
        let (t, f) = self.shape();
        if self.spectrograms.len() != self.meta.segment_ids.len() {
            return Err(FeatureError::Shape(format!(
                "{} spectrograms for {} segment ids",
                self.spectrograms.len(),
                self.meta.segment_ids.len()
            )));
        }
        out.write_all(FEATURES_MAGIC)?;
        out.write_all(&(t as u32).to_le_bytes())?;
        out.write_all(&(f as u32).to_le_bytes())?;
        out.write_all(&(self.spectrograms.len() as u64).to_le_bytes())?;
        let json = serde_json::to_vec(&self.meta)?;
        out.write_all(&(json.len() as u64).to_le_bytes())?;
        out.write_all(&json)?;
        let mut buf = Vec::with_capacity(t * f * 4);
        for spec in &self.spectrograms {
            if spec.dim() != (t, f) {
                return Err(FeatureError::Shape(format!("{:?}, expected {:?}", spec.dim(), (t, f))));
            }
            buf.clear();
            for &v in spec.iter() {
                buf.extend_from_slice(&(v as f32).to_le_bytes());
            }
            out.write_all(&buf)?;
        }
        Ok(())
    }

    pub fn read<R: Read>(mut input: R) -> Result<Self, FeatureError> {
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != FEATURES_MAGIC {
            return Err(FeatureError::BadMagic);
        }
        let mut u32b = [0u8; 4];
        let mut u64b = [0u8; 8];
        input.read_exact(&mut u32b)?;
        let t = u32::from_le_bytes(u32b) as usize;
        input.read_exact(&mut u32b)?;
        let f = u32::from_le_bytes(u32b) as usize;
        input.read_exact(&mut u64b)?;
        let count = u64::from_le_bytes(u64b) as usize;
        input.read_exact(&mut u64b)?;
        let mut json = vec![0u8; u64::from_le_bytes(u64b) as usize];
        input.read_exact(&mut json)?;
        let meta: FeatureMeta = serde_json::from_slice(&json)?;
        if (meta.dsp.target_frames, meta.dsp.n_mels) != (t, f) || meta.segment_ids.len() != count {
            return Err(FeatureError::Shape(format!(
                "header {{T: {t}, F: {f}, count: {count}}} disagrees with metadata"
            )));
        }
        let mut buf = vec![0u8; t * f * 4];
        let mut spectrograms = Vec::with_capacity(count);
        for _ in 0..count {
            input.read_exact(&mut buf)?;
            let values = buf
                .chunks_exact(4)
                .map(|c| f64::from(f32::from_le_bytes(c.try_into().expect("4 bytes"))))
                .collect();
            spectrograms.push(Array2::from_shape_vec((t, f), values).expect("sized buffer"));
        }
        Ok(Self { meta, spectrograms })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dsp = DspConfig {
            target_frames: 3,
            n_mels: 2,
            ..DspConfig::default()
        };
        let set = FeatureSet {
            meta: FeatureMeta {
                dsp,
                dsp_hash: "d".into(),
                config_hash: "c".into(),
                segment_ids: vec!["a@0".into(), "b@0".into()],
            },
            spectrograms: vec![
                Array2::from_shape_fn((3, 2), |(i, j)| (i * 2 + j) as f64 * 0.5),
                Array2::from_elem((3, 2), f64::from(-23.025_85_f32)),
            ],
        };
        let mut bytes = Vec::new();
        set.write(&mut bytes).unwrap();
        assert_eq!(&bytes[8..12], &3u32.to_le_bytes());
        let back = FeatureSet::read(bytes.as_slice()).unwrap();
        assert_eq!(back, set);
        assert_eq!(back.index()["b@0"], 1);
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(FeatureSet::read(&b"NOTAFEAT........"[..]), Err(FeatureError::BadMagic)));
    }
}
