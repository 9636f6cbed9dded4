use crate::autograd::tape::{Tape, Var};
use crate::ctensor::{RTensor, Shape};
use crate::error::{Error, Result};
use crate::kernels;
use crate::signal::stft::{stft, StftConfig};

/// Additive floor inside the logarithm of [`log_mel`].
pub const LOG_FLOOR: f64 = 1e-7;

pub fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular filters equally spaced on the HTK mel scale, without area
/// normalization.
#[derive(Clone, Debug, PartialEq)]
pub struct MelFilterbank {
    n_mels: usize,
    n_fft: usize,
    sample_rate: f64,
    f_min: f64,
    f_max: f64,
    /// `[n_mels, n_fft/2 + 1]`.
    weights: RTensor,
}

impl MelFilterbank {
    pub fn new(n_mels: usize, n_fft: usize, sample_rate: f64, f_min: f64, f_max: f64) -> Result<Self> {
        if n_mels == 0 || n_fft < 2 || !(0.0..f_max).contains(&f_min) || f_max > sample_rate / 2.0 {
            return Err(Error::Config(format!(
                "invalid filterbank: n_mels={n_mels} n_fft={n_fft} range=[{f_min}, {f_max}] sr={sample_rate}"
            )));
        }
        let bins = n_fft / 2 + 1;
        let (lo, hi) = (hz_to_mel(f_min), hz_to_mel(f_max));
        let pts: Vec<f64> = (0..n_mels + 2)
            .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / (n_mels + 1) as f64))
            .collect();
        let mut w = vec![0.0; n_mels * bins];
        for m in 0..n_mels {
            let (l, c, r) = (pts[m], pts[m + 1], pts[m + 2]);
            for k in 0..bins {
                let f = k as f64 * sample_rate / n_fft as f64;
                let up = (f - l) / (c - l);
                let down = (r - f) / (r - c);
                w[m * bins + k] = up.min(down).max(0.0);
            }
            if w[m * bins..(m + 1) * bins].iter().all(|&v| v == 0.0) {
                return Err(Error::Degenerate(format!(
                    "mel filter {m} ({l:.1}–{r:.1} Hz) covers no FFT bin; use fewer mels or a larger n_fft"
                )));
            }
        }
        Ok(MelFilterbank {
            n_mels,
            n_fft,
            sample_rate,
            f_min,
            f_max,
            weights: RTensor::from_raw(w, Shape::new([n_mels, bins])),
        })
    }

    pub fn n_mels(&self) -> usize {
        self.n_mels
    }

    pub fn n_fft(&self) -> usize {
        self.n_fft
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn f_max(&self) -> f64 {
        self.f_max
    }

    /// Center frequency of filter `m` in Hz.
    pub fn center_hz(&self, m: usize) -> f64 {
        let (lo, hi) = (hz_to_mel(self.f_min), hz_to_mel(self.f_max));
        mel_to_hz(lo + (hi - lo) * (m + 1) as f64 / (self.n_mels + 1) as f64)
    }

    pub fn weights(&self) -> &RTensor {
        &self.weights
    }

    /// `[frames, bins]` magnitudes to `[frames, n_mels]`.
    pub fn apply(&self, mag: &RTensor) -> Result<RTensor> {
        let bins = self.n_fft / 2 + 1;
        if mag.shape().ndim() != 2 || mag.shape().dim(1) != bins {
            return Err(Error::InvalidShape {
                op: "mel",
                reason: format!("expected [frames, {bins}], got {}", mag.shape()),
            });
        }
        let frames = mag.shape().dim(0);
        let out = kernels::linear(mag.data(), self.weights.data(), frames, bins, self.n_mels);
        Ok(RTensor::from_raw(out, Shape::new([frames, self.n_mels])))
    }
}

/// `ln(mel · |stft(wave)| + 1e-7)`, shape `[frames, n_mels]`.
pub fn log_mel(cfg: &StftConfig, fb: &MelFilterbank, wave: &[f64]) -> Result<RTensor> {
    check_pair(cfg, fb)?;
    let mag = stft(cfg, wave)?.abs();
    Ok(fb.apply(&mag)?.map(|v| (v + LOG_FLOOR).ln()))
}

fn check_pair(cfg: &StftConfig, fb: &MelFilterbank) -> Result<()> {
    if cfg.n_fft() != fb.n_fft() {
        return Err(Error::Config(format!(
            "filterbank built for n_fft={}, STFT uses {}",
            fb.n_fft(),
            cfg.n_fft()
        )));
    }
    Ok(())
}

impl Tape {
    /// Differentiable [`log_mel`] of a real `[T]` node.
    pub fn log_mel(&mut self, wave: Var, cfg: &StftConfig, fb: &MelFilterbank) -> Result<Var> {
        check_pair(cfg, fb)?;
        let spec = self.stft(wave, cfg)?;
        let mag = self.cabs(spec)?;
        let w = self.constant(fb.weights().clone());
        let mel = self.linear(mag, w)?;
        self.log_eps(mel, LOG_FLOOR)
    }
}
