use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::autograd::tape::{Backward, Grad, Tape, Value, Var};
use crate::ctensor::{CTensor, RTensor, Shape};
use crate::error::{Error, Result};

/// Window-power sums below this are treated as uncovered.
const WSUM_FLOOR: f64 = 1e-11;

/// Analysis/synthesis parameters. The Hann window of `win_length` samples
/// is centered inside the `n_fft` frame.
#[derive(Clone)]
pub struct StftConfig {
    n_fft: usize,
    hop: usize,
    win_length: usize,
    window: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for StftConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StftConfig")
            .field("n_fft", &self.n_fft)
            .field("hop", &self.hop)
            .field("win_length", &self.win_length)
            .finish()
    }
}

impl PartialEq for StftConfig {
    fn eq(&self, other: &Self) -> bool {
        (self.n_fft, self.hop, self.win_length) == (other.n_fft, other.hop, other.win_length)
    }
}

/// Periodic Hann window.
pub fn hann(len: usize) -> Vec<f64> {
    (0..len).map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos()).collect()
}

impl StftConfig {
    pub fn new(n_fft: usize, hop: usize, win_length: usize) -> Result<Self> {
        if n_fft < 2 || !n_fft.is_multiple_of(2) {
            return Err(Error::Config(format!("n_fft must be even and ≥ 2, got {n_fft}")));
        }
        if hop == 0 || hop > win_length || win_length > n_fft {
            return Err(Error::Config(format!(
                "need 0 < hop ≤ win_length ≤ n_fft, got hop={hop} win_length={win_length} n_fft={n_fft}"
            )));
        }
        let mut window = vec![0.0; n_fft];
        let left = (n_fft - win_length) / 2;
        window[left..left + win_length].copy_from_slice(&hann(win_length));

        // every residue class modulo hop must receive window power
        for r in 0..hop {
            let s: f64 = window.iter().skip(r).step_by(hop).map(|w| w * w).sum();
            if s <= WSUM_FLOOR {
                return Err(Error::ColaViolation(format!(
                    "window power vanishes at offset {r} for hop {hop}, win_length {win_length}"
                )));
            }
        }
        let mut planner = FftPlanner::new();
        Ok(StftConfig {
            n_fft,
            hop,
            win_length,
            window,
            fwd: planner.plan_fft_forward(n_fft),
            inv: planner.plan_fft_inverse(n_fft),
        })
    }

    pub fn n_fft(&self) -> usize {
        self.n_fft
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn win_length(&self) -> usize {
        self.win_length
    }

    /// Window zero-padded to `n_fft`.
    pub fn window(&self) -> &[f64] {
        &self.window
    }

    pub fn bins(&self) -> usize {
        self.n_fft / 2 + 1
    }

    pub fn pad(&self) -> usize {
        self.n_fft / 2
    }

    pub fn frames(&self, len: usize) -> usize {
        len / self.hop + 1
    }

    /// Shortest accepted signal.
    pub fn min_len(&self) -> usize {
        self.win_length.max(self.pad() + 1)
    }

    /// Signal length that `istft` produces by default for `frames` frames.
    pub fn default_len(&self, frames: usize) -> usize {
        frames.saturating_sub(1) * self.hop
    }
}

/// Index into the signal for position `i` of the reflect-padded signal.
fn reflect(i: usize, pad: usize, len: usize) -> usize {
    let j = i as isize - pad as isize;
    if j < 0 {
        (-j) as usize
    } else if j as usize >= len {
        2 * (len - 1) - j as usize
    } else {
        j as usize
    }
}

/// Windowed FFT of every frame of the reflect-padded signal; `[frames, bins]`.
pub fn stft(cfg: &StftConfig, wave: &[f64]) -> Result<CTensor> {
    let t = wave.len();
    if t < cfg.min_len() {
        return Err(Error::SignalTooShort { len: t, min: cfg.min_len() });
    }
    let (n, pad, bins) = (cfg.n_fft, cfg.pad(), cfg.bins());
    let frames = cfg.frames(t);
    let (mut re, mut im) = (Vec::with_capacity(frames * bins), Vec::with_capacity(frames * bins));
    let mut buf = vec![Complex::new(0.0, 0.0); n];
    let mut scratch = vec![Complex::new(0.0, 0.0); cfg.fwd.get_inplace_scratch_len()];
    for f in 0..frames {
        for (k, b) in buf.iter_mut().enumerate() {
            *b = Complex::new(cfg.window[k] * wave[reflect(f * cfg.hop + k, pad, t)], 0.0);
        }
        cfg.fwd.process_with_scratch(&mut buf, &mut scratch);
        for c in &buf[..bins] {
            re.push(c.re);
            im.push(c.im);
        }
    }
    Ok(CTensor::from_raw(re, im, Shape::new([frames, bins])))
}

fn check_spec(cfg: &StftConfig, shape: &Shape) -> Result<usize> {
    if shape.ndim() != 2 || shape.dim(1) != cfg.bins() || shape.dim(0) == 0 {
        return Err(Error::InvalidShape {
            op: "istft",
            reason: format!("expected [frames, {}] spectrogram, got {shape}", cfg.bins()),
        });
    }
    Ok(shape.dim(0))
}

/// Sum of squared windows over the padded output.
fn window_power(cfg: &StftConfig, frames: usize) -> Vec<f64> {
    let mut wsum = vec![0.0; (frames - 1) * cfg.hop + cfg.n_fft];
    for f in 0..frames {
        for (k, w) in cfg.window.iter().enumerate() {
            wsum[f * cfg.hop + k] += w * w;
        }
    }
    wsum
}

/// Inverse FFT per frame, synthesis window, overlap-add, and normalization by
/// the summed squared window. `length` defaults to `(frames − 1)·hop`.
pub fn istft(cfg: &StftConfig, spec: &CTensor, length: Option<usize>) -> Result<RTensor> {
    let frames = check_spec(cfg, spec.shape())?;
    let (n, pad, bins) = (cfg.n_fft, cfg.pad(), cfg.bins());
    let len = length.unwrap_or_else(|| cfg.default_len(frames));
    let wsum = window_power(cfg, frames);
    let mut acc = vec![0.0; wsum.len()];
    let mut buf = vec![Complex::new(0.0, 0.0); n];
    let mut scratch = vec![Complex::new(0.0, 0.0); cfg.inv.get_inplace_scratch_len()];
    for f in 0..frames {
        let row = f * bins;
        // Hermitian extension; imaginary parts at DC and Nyquist are dropped
        buf[0] = Complex::new(spec.re()[row], 0.0);
        buf[n / 2] = Complex::new(spec.re()[row + n / 2], 0.0);
        for k in 1..n / 2 {
            let c = Complex::new(spec.re()[row + k], spec.im()[row + k]);
            buf[k] = c;
            buf[n - k] = c.conj();
        }
        cfg.inv.process_with_scratch(&mut buf, &mut scratch);
        for (k, b) in buf.iter().enumerate() {
            acc[f * cfg.hop + k] += cfg.window[k] * b.re / n as f64;
        }
    }
    let out = (0..len)
        .map(|i| {
            let j = i + pad;
            match (acc.get(j), wsum.get(j)) {
                (Some(a), Some(&w)) if w > WSUM_FLOOR => a / w,
                _ => 0.0,
            }
        })
        .collect();
    Ok(RTensor::from_raw(out, Shape::new([len])))
}

struct StftOp {
    cfg: StftConfig,
    len: usize,
}

impl Backward for StftOp {
    fn backward(&self, _: &[&Value], _: &Value, g: &Grad, _: &[bool]) -> Result<Vec<Option<Grad>>> {
        let cfg = &self.cfg;
        let (n, pad, bins) = (cfg.n_fft, cfg.pad(), cfg.bins());
        let frames = cfg.frames(self.len);
        let gi = g.im_or_zero();
        let mut gw = vec![0.0; self.len];
        let mut buf = vec![Complex::new(0.0, 0.0); n];
        let mut scratch = vec![Complex::new(0.0, 0.0); cfg.inv.get_inplace_scratch_len()];
        for f in 0..frames {
            // ∂L/∂a_n = Re Σ_k G_k e^{+2πikn/N} over the stored half-spectrum
            buf.iter_mut().for_each(|b| *b = Complex::new(0.0, 0.0));
            for k in 0..bins {
                buf[k] = Complex::new(g.re[f * bins + k], gi[f * bins + k]);
            }
            cfg.inv.process_with_scratch(&mut buf, &mut scratch);
            for (k, b) in buf.iter().enumerate() {
                gw[reflect(f * cfg.hop + k, pad, self.len)] += cfg.window[k] * b.re;
            }
        }
        Ok(vec![Some(Grad::real(gw))])
    }
}

struct IstftOp {
    cfg: StftConfig,
    frames: usize,
    len: usize,
}

impl Backward for IstftOp {
    fn backward(&self, _: &[&Value], _: &Value, g: &Grad, _: &[bool]) -> Result<Vec<Option<Grad>>> {
        let cfg = &self.cfg;
        let (n, pad, bins) = (cfg.n_fft, cfg.pad(), cfg.bins());
        let wsum = window_power(cfg, self.frames);
        // gradient on the padded, normalized accumulator
        let mut h = vec![0.0; wsum.len()];
        for i in 0..self.len {
            let j = i + pad;
            if j < h.len() && wsum[j] > WSUM_FLOOR {
                h[j] = g.re[i] / wsum[j];
            }
        }
        let (mut gr, mut gim) = (vec![0.0; self.frames * bins], vec![0.0; self.frames * bins]);
        let mut buf = vec![Complex::new(0.0, 0.0); n];
        let mut scratch = vec![Complex::new(0.0, 0.0); cfg.fwd.get_inplace_scratch_len()];
        let nf = n as f64;
        for f in 0..self.frames {
            for (k, b) in buf.iter_mut().enumerate() {
                *b = Complex::new(cfg.window[k] * h[f * cfg.hop + k], 0.0);
            }
            cfg.fwd.process_with_scratch(&mut buf, &mut scratch);
            for k in 0..bins {
                let edge = k == 0 || k == n / 2;
                let c = if edge { 1.0 } else { 2.0 } / nf;
                gr[f * bins + k] = c * buf[k].re;
                gim[f * bins + k] = if edge { 0.0 } else { c * buf[k].im };
            }
        }
        Ok(vec![Some(Grad::complex(gr, gim))])
    }
}

impl Tape {
    /// Differentiable [`stft`] of a real `[T]` node.
    pub fn stft(&mut self, wave: Var, cfg: &StftConfig) -> Result<Var> {
        let w = self.value(wave).as_real("stft")?;
        if w.shape().ndim() != 1 {
            return Err(Error::InvalidShape {
                op: "stft",
                reason: format!("expected a 1-D signal, got {}", w.shape()),
            });
        }
        let len = w.len();
        let spec = stft(cfg, w.data())?;
        let op = StftOp { cfg: cfg.clone(), len };
        Ok(self.record("stft", &[wave], Value::Complex(spec), Box::new(op)))
    }

    /// Differentiable [`istft`] of a complex `[frames, bins]` node.
    pub fn istft(&mut self, spec: Var, cfg: &StftConfig, length: Option<usize>) -> Result<Var> {
        let s = self.value(spec).as_complex("istft")?;
        let frames = check_spec(cfg, s.shape())?;
        let len = length.unwrap_or_else(|| cfg.default_len(frames));
        let wave = istft(cfg, s, Some(len))?;
        let op = IstftOp { cfg: cfg.clone(), frames, len };
        Ok(self.record("istft", &[spec], Value::Real(wave), Box::new(op)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autograd::gradcheck::{check_params, FD_STEP};
    use crate::autograd::params::ParamStore;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    /// Direct DFT sum of one frame.
    fn dft_frame(cfg: &StftConfig, wave: &[f64], f: usize) -> Vec<(f64, f64)> {
        let n = cfg.n_fft();
        let frame: Vec<f64> = (0..n).map(|k| cfg.window()[k] * wave[reflect(f * cfg.hop() + k, cfg.pad(), wave.len())]).collect();
        (0..cfg.bins())
            .map(|k| {
                let mut acc = (0.0, 0.0);
                for (t, x) in frame.iter().enumerate() {
                    let a = -2.0 * PI * ((k * t) % n) as f64 / n as f64;
                    acc.0 += x * a.cos();
                    acc.1 += x * a.sin();
                }
                acc
            })
            .collect()
    }

    fn rel_interior(cfg: &StftConfig, x: &[f64], y: &[f64]) -> f64 {
        let w = cfg.win_length();
        let (mut num, mut den) = (0.0, 0.0);
        for i in w..x.len() - w {
            num += (x[i] - y[i]).powi(2);
            den += x[i] * x[i];
        }
        (num / den).sqrt()
    }

    #[test]
    fn frame_count_and_bins() {
        let cfg = StftConfig::new(16, 4, 16).unwrap();
        let s = stft(&cfg, &noise(37, 0)).unwrap();
        assert_eq!(s.shape().dims(), &[37 / 4 + 1, 9]);
        assert!(matches!(stft(&cfg, &noise(15, 0)), Err(Error::SignalTooShort { .. })));
    }

    #[test]
    fn invalid_configs() {
        assert!(StftConfig::new(16, 0, 16).is_err());
        assert!(StftConfig::new(16, 17, 16).is_err());
        assert!(StftConfig::new(16, 8, 32).is_err());
        assert!(StftConfig::new(15, 4, 8).is_err());
        // a 2-sample periodic Hann is [0, 1]: hop 2 leaves offset 0 uncovered
        assert!(matches!(StftConfig::new(2, 2, 2), Err(Error::ColaViolation(_))));
    }

    #[test]
    fn dc_energy_stays_in_low_bins() {
        let cfg = StftConfig::new(64, 16, 64).unwrap();
        let s = stft(&cfg, &vec![1.0; 400]).unwrap();
        let bins = cfg.bins();
        for f in 0..s.shape().dim(0) {
            let (x0, y0) = s.get(f * bins);
            let m0 = x0.hypot(y0);
            for k in 2..bins {
                let (x, y) = s.get(f * bins + k);
                assert!(x.hypot(y) <= 1e-10 * m0, "frame {f} bin {k}");
            }
        }
    }

    #[test]
    fn matches_dft_sum_and_peaks_at_bin() {
        let cfg = StftConfig::new(128, 32, 128).unwrap();
        let k0 = 10;
        let wave: Vec<f64> = (0..1000).map(|t| (2.0 * PI * k0 as f64 * t as f64 / 128.0).sin()).collect();
        let s = stft(&cfg, &wave).unwrap();
        let bins = cfg.bins();
        for f in [0, 5, 17, s.shape().dim(0) - 1] {
            let want = dft_frame(&cfg, &wave, f);
            for k in 0..bins {
                let (x, y) = s.get(f * bins + k);
                assert!((x - want[k].0).abs() < 1e-9 && (y - want[k].1).abs() < 1e-9);
            }
        }
        let f = 10;
        let peak = (0..bins).max_by(|&a, &b| s.get(f * bins + a).0.hypot(s.get(f * bins + a).1).total_cmp(&s.get(f * bins + b).0.hypot(s.get(f * bins + b).1))).unwrap();
        assert_eq!(peak, k0);
    }

    #[test]
    fn linearity_and_parseval() {
        let cfg = StftConfig::new(64, 16, 48).unwrap();
        let (u, v) = (noise(500, 1), noise(500, 2));
        let mix: Vec<f64> = u.iter().zip(&v).map(|(a, b)| 0.3 * a - 1.7 * b).collect();
        let (su, sv, sm) = (stft(&cfg, &u).unwrap(), stft(&cfg, &v).unwrap(), stft(&cfg, &mix).unwrap());
        let lin = su.scale(0.3).sub(&sv.scale(1.7)).unwrap();
        assert!(lin.max_abs_diff(&sm) < 1e-10);

        // Σ_k c_k |X_k|² / N equals the windowed frame energy
        let n = cfg.n_fft();
        let bins = cfg.bins();
        for f in [0, 7, 20] {
            let mut spec_e = 0.0;
            for k in 0..bins {
                let (x, y) = su.get(f * bins + k);
                let c = if k == 0 || k == n / 2 { 1.0 } else { 2.0 };
                spec_e += c * (x * x + y * y) / n as f64;
            }
            let time_e: f64 = (0..n).map(|k| (cfg.window()[k] * u[reflect(f * cfg.hop() + k, cfg.pad(), u.len())]).powi(2)).sum();
            assert!((spec_e / time_e - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn round_trips() {
        for (n, h, w) in [(1024, 256, 1024), (512, 128, 512), (64, 16, 40)] {
            let cfg = StftConfig::new(n, h, w).unwrap();
            let white = noise(24_000, 3);
            let tone: Vec<f64> = (0..24_000).map(|t| (2.0 * PI * 440.0 * t as f64 / 24_000.0).sin()).collect();
            for x in [white, tone] {
                let y = istft(&cfg, &stft(&cfg, &x).unwrap(), Some(x.len())).unwrap();
                assert!(rel_interior(&cfg, &x, y.data()) <= 1e-6, "({n}, {h}, {w})");
            }
        }
    }

    #[test]
    fn zero_spectrogram_gives_silence() {
        let cfg = StftConfig::new(64, 16, 64).unwrap();
        let y = istft(&cfg, &CTensor::zeros([10, 33]), None).unwrap();
        assert_eq!(y.len(), 9 * 16);
        assert!(y.data().iter().all(|&v| v == 0.0));
        assert!(istft(&cfg, &CTensor::zeros([10, 32]), None).is_err());
    }

    #[test]
    fn adjoints_match_finite_differences() {
        let cfg = StftConfig::new(16, 4, 12).unwrap();
        let mut store = ParamStore::new();
        let wave = store.add_real("w", RTensor::new(noise(30, 4), [30]).unwrap());
        let wts = CTensor::new(noise(8 * 9, 5), noise(8 * 9, 6), [8, 9]).unwrap();
        let ids = store.ids();
        let r = check_params(&mut store, &ids, FD_STEP, |t, s| {
            let x = t.param(s, wave);
            let spec = t.stft(x, &cfg)?;
            let c = t.constant(wts.clone());
            let p = t.mul(spec, c)?;
            let r = t.re(p)?;
            t.sum(r)
        })
        .unwrap();
        assert!(r.max_rel_error < 1e-6, "{r:?}");

        let mut store = ParamStore::new();
        let spec = store.add_complex("s", CTensor::new(noise(6 * 9, 7), noise(6 * 9, 8), [6, 9]).unwrap());
        let weights = RTensor::new(noise(22, 9), [22]).unwrap();
        let ids = store.ids();
        let r = check_params(&mut store, &ids, FD_STEP, |t, s| {
            let z = t.param(s, spec);
            let y = t.istft(z, &cfg, Some(22))?;
            let c = t.constant(weights.clone());
            let p = t.mul(y, c)?;
            t.sum(p)
        })
        .unwrap();
        assert!(r.max_rel_error < 1e-6, "{r:?}");
    }
}
