//! GAN losses for a complex spectrogram discriminator and a real waveform
//! discriminator, plus a KDE-based Jensen–Shannon divergence.

mod adversarial;
pub mod kde;

pub use adversarial::{
    feature_matching, feature_matching_complex, hinge_d, hinge_d_complex, hinge_g, hinge_g_complex, mel_l1,
    total_generator_loss, GeneratorTerms, LossWeights,
};
pub use kde::{jsd_1d, Bandwidth, KdeConfig};
