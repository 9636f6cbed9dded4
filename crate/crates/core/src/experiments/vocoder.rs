//! A tiny complex vocoder overfit on one synthetic clip: log-mel in,
//! complex spectrogram out, waveform through the inverse STFT.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autograd::optim::{Adam, Optimizer};
use crate::autograd::params::{ParamId, ParamStore};
use crate::autograd::tape::{Tape, Var};
use crate::ctensor::{CTensor, RTensor, Shape};
use crate::error::{Error, Result};
use crate::kernels::ConvGeometry;
use crate::layers::{Activation, Backend, ComplexConv1d, ComplexLayerNorm, Layer, PhaseQuantizer};
use crate::signal::mel::{log_mel, MelFilterbank};
use crate::signal::mrstft::{default_resolutions, mr_stft_error};
use crate::signal::stft::StftConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MiniVocoderConfig {
    pub layers: usize,
    pub dim: usize,
    /// Inner width of each block as a multiple of `dim`.
    pub expansion: usize,
    pub kernel_size: usize,
    pub n_fft: usize,
    pub hop: usize,
    pub win_length: usize,
    pub n_mels: usize,
    pub sample_rate: u32,
    pub steps: usize,
    pub lr: f64,
    /// Learning rate reached at the last step of a cosine decay.
    pub lr_min: f64,
    pub betas: (f64, f64),
    /// Phase quantization levels after the stem; 0 disables it.
    pub pq_levels: u32,
    pub seed: u64,
    pub backend: Backend,
}

impl Default for MiniVocoderConfig {
    fn default() -> Self {
        MiniVocoderConfig {
            layers: 2,
            dim: 32,
            expansion: 2,
            kernel_size: 7,
            n_fft: 1024,
            hop: 256,
            win_length: 1024,
            n_mels: 100,
            sample_rate: 24_000,
            steps: 2000,
            lr: 2e-3,
            lr_min: 1e-7,
            betas: (0.8, 0.9),
            pq_levels: 0,
            seed: 0,
            backend: Backend::Block,
        }
    }
}

impl MiniVocoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layers == 0
            || self.dim == 0
            || self.expansion == 0
            || self.kernel_size.is_multiple_of(2)
            || self.n_mels == 0
            || self.sample_rate == 0
            || !(self.lr > 0.0)
            || !(0.0..=self.lr).contains(&self.lr_min)
        {
            return Err(Error::Config(format!("invalid mini-vocoder config {self:?}")));
        }
        Ok(())
    }

    pub fn stft(&self) -> Result<StftConfig> {
        StftConfig::new(self.n_fft, self.hop, self.win_length)
    }

    pub fn filterbank(&self) -> Result<MelFilterbank> {
        let sr = f64::from(self.sample_rate);
        MelFilterbank::new(self.n_mels, self.n_fft, sr, 0.0, sr / 2.0)
    }
}

/// `Σ amp·sin(2π f t)` sampled at `sample_rate`.
pub fn multi_sine(sample_rate: u32, seconds: f64, partials: &[(f64, f64)]) -> RTensor {
    let sr = f64::from(sample_rate);
    let n = (seconds * sr).round() as usize;
    let d = (0..n)
        .map(|k| {
            let t = k as f64 / sr;
            partials.iter().map(|&(f, a)| a * (2.0 * PI * f * t).sin()).sum()
        })
        .collect();
    RTensor::from_raw(d, Shape::new([n]))
}

/// One second of 220 + 550 + 1300 Hz.
pub fn default_signal(sample_rate: u32) -> RTensor {
    multi_sine(sample_rate, 1.0, &[(220.0, 0.4), (550.0, 0.3), (1300.0, 0.2)])
}

/// Depthwise conv → channel layer norm → pointwise → split GELU → pointwise,
/// with a residual connection.
struct Block {
    depthwise: ComplexConv1d,
    norm: ComplexLayerNorm,
    expand: ComplexConv1d,
    project: ComplexConv1d,
}

impl Block {
    fn new(store: &mut ParamStore, name: &str, cfg: &MiniVocoderConfig, rng: &mut ChaCha8Rng) -> Result<Self> {
        let (c, k, b) = (cfg.dim, cfg.kernel_size, cfg.backend);
        let inner = cfg.dim * cfg.expansion;
        Ok(Block {
            depthwise: ComplexConv1d::new(store, &format!("{name}.dw"), c, c, k, ConvGeometry::one_d(1, k / 2, 1, c), true, b, rng)?,
            norm: ComplexLayerNorm::new(store, &format!("{name}.norm"), c, 1, crate::layers::norm::DEFAULT_EPS, b)?,
            expand: ComplexConv1d::new(store, &format!("{name}.pw1"), c, inner, 1, ConvGeometry::default(), true, b, rng)?,
            project: ComplexConv1d::new(store, &format!("{name}.pw2"), inner, c, 1, ConvGeometry::default(), true, b, rng)?,
        })
    }

    fn forward(&self, tape: &mut Tape, store: &ParamStore, x: Var) -> Result<Var> {
        let h = self.depthwise.forward(tape, store, x)?;
        let h = self.norm.forward(tape, store, h)?;
        let h = self.expand.forward(tape, store, h)?;
        let h = tape.split_activation(h, Activation::Gelu)?;
        let h = self.project.forward(tape, store, h)?;
        tape.add(x, h)
    }

    fn params(&self) -> Vec<ParamId> {
        [self.depthwise.params(), self.norm.params(), self.expand.params(), self.project.params()].concat()
    }
}

pub struct MiniVocoder {
    pub cfg: MiniVocoderConfig,
    pub store: ParamStore,
    stem: ComplexConv1d,
    pq: PhaseQuantizer,
    blocks: Vec<Block>,
    head: ComplexConv1d,
    /// Per-bin modReLU threshold on the head output; bins that stay under it
    /// are exactly silent.
    threshold: ParamId,
    stft: StftConfig,
}

impl MiniVocoder {
    pub fn new(cfg: MiniVocoderConfig) -> Result<Self> {
        cfg.validate()?;
        let stft = cfg.stft()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut store = ParamStore::new();
        let k = cfg.kernel_size;
        let stem = ComplexConv1d::new(
            &mut store,
            "stem",
            cfg.n_mels,
            cfg.dim,
            k,
            ConvGeometry::one_d(1, k / 2, 1, 1),
            true,
            cfg.backend,
            &mut rng,
        )?;
        let blocks = (0..cfg.layers)
            .map(|i| Block::new(&mut store, &format!("block{i}"), &cfg, &mut rng))
            .collect::<Result<_>>()?;
        let head = ComplexConv1d::new(
            &mut store,
            "head",
            cfg.dim,
            stft.bins(),
            1,
            ConvGeometry::default(),
            true,
            cfg.backend,
            &mut rng,
        )?;
        let threshold = store.add_real("head.threshold", RTensor::zeros([stft.bins(), 1]));
        Ok(MiniVocoder { pq: PhaseQuantizer::new(cfg.pq_levels), cfg, store, stem, blocks, head, threshold, stft })
    }

    pub fn params(&self) -> Vec<ParamId> {
        let mut p = self.stem.params();
        p.extend(self.blocks.iter().flat_map(Block::params));
        p.extend(self.head.params());
        p.push(self.threshold);
        p
    }

    /// Frames on each side whose outputs would see the convolutions' zero
    /// padding.
    pub fn radius(&self) -> usize {
        (self.cfg.kernel_size / 2) * (1 + self.cfg.layers)
    }

    /// Features `[n_mels, frames]` (real, as a complex tensor) to a waveform
    /// of `length` samples. The features are edge-replicated by
    /// [`MiniVocoder::radius`] frames and the padding is cropped after the head.
    pub fn forward(&self, tape: &mut Tape, features: &CTensor, length: usize) -> Result<Var> {
        let (m, f) = (features.shape().dim(0), features.shape().dim(1));
        let r = self.radius();
        let x = tape.constant(replicate_pad(features, r)?);
        let mut h = self.stem.forward(tape, &self.store, x)?;
        h = self.pq.forward(tape, &self.store, h)?;
        for b in &self.blocks {
            h = b.forward(tape, &self.store, h)?;
        }
        let spec = self.head.forward(tape, &self.store, h)?;
        let spec = tape.narrow(spec, 2, r, f)?;
        let t = tape.param(&self.store, self.threshold);
        let spec = tape.mod_relu(spec, t)?;
        // unit outputs map to unit-amplitude sinusoids
        let spec = tape.scale(spec, self.stft.window().iter().sum::<f64>() / 2.0)?;
        let spec = tape.reshape(spec, [self.stft.bins(), f])?;
        let spec = tape.transpose(spec)?;
        debug_assert_eq!(m, self.cfg.n_mels);
        tape.istft(spec, &self.stft, Some(length))
    }
}

/// `[m, f]` to `[1, m, f + 2r]`, repeating the first and last frames.
fn replicate_pad(x: &CTensor, r: usize) -> Result<CTensor> {
    let (m, f) = (x.shape().dim(0), x.shape().dim(1));
    let w = f + 2 * r;
    let (mut re, mut im) = (Vec::with_capacity(m * w), Vec::with_capacity(m * w));
    for i in 0..m {
        for j in 0..w {
            let src = i * f + j.saturating_sub(r).min(f - 1);
            re.push(x.re()[src]);
            im.push(x.im()[src]);
        }
    }
    CTensor::new(re, im, [1, m, w])
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VocoderReport {
    pub steps: usize,
    pub pq_levels: u32,
    pub losses: Vec<f64>,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub mr_stft: f64,
    /// Set when the loss failed to decrease over the run.
    pub failure: Option<String>,
    #[serde(skip)]
    pub wave: Option<RTensor>,
}

/// Fraction of the initial mel-L1 a default-config run must remove.
pub const SMOKE_MIN_REDUCTION: f64 = 0.9;

impl VocoderReport {
    pub fn reduction(&self) -> f64 {
        1.0 - self.final_loss / self.initial_loss
    }

    /// No failure, and a run with updates met [`SMOKE_MIN_REDUCTION`].
    pub fn passed(&self) -> bool {
        self.failure.is_none() && (self.steps == 0 || self.reduction() >= SMOKE_MIN_REDUCTION)
    }
}

/// Normalized log-mel of `wave`, laid out `[n_mels, frames]`.
fn features(cfg: &StftConfig, fb: &MelFilterbank, wave: &[f64]) -> Result<(RTensor, CTensor)> {
    let lm = log_mel(cfg, fb, wave)?;
    let (f, m) = (lm.shape().dim(0), lm.shape().dim(1));
    let n = lm.len() as f64;
    let mean = lm.sum() / n;
    let sd = (lm.data().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt().max(1e-8);
    let mut t = vec![0.0; lm.len()];
    for i in 0..f {
        for j in 0..m {
            t[j * f + i] = (lm.data()[i * m + j] - mean) / sd;
        }
    }
    Ok((lm, CTensor::from_real(&RTensor::from_raw(t, Shape::new([m, f])))))
}

fn cosine_lr(cfg: &MiniVocoderConfig, step: usize) -> f64 {
    let p = step as f64 / cfg.steps.max(1) as f64;
    cfg.lr_min + 0.5 * (cfg.lr - cfg.lr_min) * (1.0 + (PI * p).cos())
}

/// Trains on mel-L1 alone. `losses[k]` is the loss before update `k`, and
/// the last entry is the loss after the final update.
pub fn mini_vocoder_overfit(cfg: &MiniVocoderConfig, wave: &RTensor) -> Result<VocoderReport> {
    let mut model = MiniVocoder::new(cfg.clone())?;
    let stft = model.stft.clone();
    let fb = cfg.filterbank()?;
    let len = wave.len();
    if len < stft.min_len() {
        return Err(Error::SignalTooShort { len, min: stft.min_len() });
    }
    let (target, feats) = features(&stft, &fb, wave.data())?;
    let ids = model.params();
    let mut opt = Adam::new(cfg.lr, cfg.betas);
    let mut losses = Vec::with_capacity(cfg.steps + 1);
    let mut tape = Tape::new();
    for step in 0..=cfg.steps {
        tape.clear();
        let y = model.forward(&mut tape, &feats, len)?;
        let lm = tape.log_mel(y, &stft, &fb)?;
        let t = tape.constant(target.clone());
        let loss = tape.l1(lm, t)?;
        let l = tape.scalar(loss)?;
        if !l.is_finite() {
            return Err(Error::Diverged { step, reason: format!("mel-L1 = {l}") });
        }
        losses.push(l);
        if step == cfg.steps {
            break;
        }
        tape.backward_into(loss, &mut model.store)?;
        opt.lr = cosine_lr(cfg, step);
        opt.step(&mut model.store, &ids)?;
    }
    let mut tape = Tape::new();
    let y = model.forward(&mut tape, &feats, len)?;
    let out = tape.real(y)?.clone();
    let mr_stft = mr_stft_error(wave.data(), out.data(), &default_resolutions())?;
    let (initial_loss, final_loss) = (losses[0], *losses.last().expect("at least one loss"));
    let failure = (cfg.steps > 0 && final_loss >= initial_loss)
        .then(|| format!("mel-L1 did not decrease: {initial_loss} -> {final_loss}"));
    Ok(VocoderReport {
        steps: cfg.steps,
        pq_levels: cfg.pq_levels,
        losses,
        initial_loss,
        final_loss,
        mr_stft,
        failure,
        wave: Some(out),
    })
}
