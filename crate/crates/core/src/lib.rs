//! Underwater acoustic target recognition pipeline: AIS decoding, audio-text
//! corpus construction, log-mel featurization, a LoRA-adapted audio/text
//! dual encoder trained contrastively, and retrieval evaluation.

pub mod ais;
pub mod audio;
pub mod autograd;
pub mod config;
pub mod corpus;
pub mod dsp;
pub mod eval;
pub mod features;
pub mod model;
pub mod pipeline;
pub mod selftest;
pub mod synth;
pub mod train;
