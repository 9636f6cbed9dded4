//! Short-time Fourier analysis and synthesis, mel features and the
//! multi-resolution STFT distance.

pub mod io;
pub mod mel;
pub mod mrstft;
pub mod stft;

pub use mel::{log_mel, MelFilterbank};
pub use mrstft::{default_resolutions, mr_stft_error};
pub use stft::{istft, stft, StftConfig};
