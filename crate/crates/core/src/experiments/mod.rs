//! Desk-scale experiments: the toy GAN comparison and the mini-vocoder
//! overfit run.

pub mod spiral;
pub mod toygan;
pub mod vocoder;

pub use spiral::{sample_target, SpiralConfig};
pub use toygan::{marginal_jsd, summarize, train_toy_gan, GanConfig, Mode, ModeSummary, RunReport, Spread, TrainSettings};
pub use vocoder::{default_signal, mini_vocoder_overfit, MiniVocoderConfig, VocoderReport, SMOKE_MIN_REDUCTION};
