use serde::{Deserialize, Serialize};

use crate::autograd::tape::{Tape, Var};
use crate::ctensor::{CTensor, RTensor};
use crate::error::{Error, Result};
use crate::layers::Activation;

/// Weights of the mel, waveform-discriminator and spectrogram-discriminator
/// terms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub mel: f64,
    pub mpd: f64,
    pub cmrd: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights { mel: 45.0, mpd: 1.0, cmrd: 0.1 }
    }
}

impl LossWeights {
    pub fn new(mel: f64, mpd: f64, cmrd: f64) -> Result<Self> {
        if [mel, mpd, cmrd].iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Config(format!("loss weights must be finite and nonnegative, got ({mel}, {mpd}, {cmrd})")));
        }
        Ok(LossWeights { mel, mpd, cmrd })
    }
}

/// Scalar terms entering the generator objective.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GeneratorTerms {
    pub mel_l1: f64,
    pub g_mpd: f64,
    pub fm_mpd: f64,
    pub g_cmrd: f64,
    pub fm_cmrd: f64,
}

pub fn total_generator_loss(t: &GeneratorTerms, w: &LossWeights) -> f64 {
    w.mel * t.mel_l1 + w.mpd * (t.g_mpd + t.fm_mpd) + w.cmrd * (t.g_cmrd + t.fm_cmrd)
}

fn mean_of(x: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().map(|&v| f(v)).sum::<f64>() / x.len() as f64
}

fn hinge(v: f64) -> f64 {
    v.max(0.0)
}

fn same_count(op: &'static str, a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Config(format!("{op}: {a} real vs {b} fake score sets")));
    }
    Ok(())
}

/// Discriminator hinge, one score tensor per sub-discriminator; averaged over
/// samples and summed over sub-discriminators.
pub fn hinge_d(real: &[RTensor], fake: &[RTensor]) -> Result<f64> {
    same_count("hinge_d", real.len(), fake.len())?;
    Ok(real
        .iter()
        .zip(fake)
        .map(|(r, f)| mean_of(r.data(), |v| hinge(1.0 - v)) + mean_of(f.data(), |v| hinge(1.0 + v)))
        .sum())
}

/// Hinge applied separately to the real and imaginary parts, each half-weighted.
pub fn hinge_d_complex(real: &[CTensor], fake: &[CTensor]) -> Result<f64> {
    same_count("hinge_d_complex", real.len(), fake.len())?;
    Ok(real
        .iter()
        .zip(fake)
        .map(|(r, f)| {
            0.5 * (mean_of(r.re(), |v| hinge(1.0 - v)) + mean_of(r.im(), |v| hinge(1.0 - v)))
                + 0.5 * (mean_of(f.re(), |v| hinge(1.0 + v)) + mean_of(f.im(), |v| hinge(1.0 + v)))
        })
        .sum())
}

pub fn hinge_g(fake: &[RTensor]) -> f64 {
    fake.iter().map(|f| mean_of(f.data(), |v| hinge(1.0 - v))).sum()
}

pub fn hinge_g_complex(fake: &[CTensor]) -> f64 {
    fake.iter()
        .map(|f| 0.5 * (mean_of(f.re(), |v| hinge(1.0 - v)) + mean_of(f.im(), |v| hinge(1.0 - v))))
        .sum()
}

fn check_pair_shapes<'a>(
    op: &'static str,
    a: impl ExactSizeIterator<Item = &'a crate::ctensor::Shape>,
    b: impl ExactSizeIterator<Item = &'a crate::ctensor::Shape>,
) -> Result<()> {
    same_count(op, a.len(), b.len())?;
    for (x, y) in a.zip(b) {
        if x != y {
            return Err(Error::ShapeMismatch { op, lhs: x.clone(), rhs: y.clone() });
        }
    }
    Ok(())
}

fn mean_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64
}

/// Sum over layers of the mean absolute feature difference.
pub fn feature_matching(real: &[RTensor], fake: &[RTensor]) -> Result<f64> {
    check_pair_shapes("feature_matching", real.iter().map(|t| t.shape()), fake.iter().map(|t| t.shape()))?;
    Ok(real.iter().zip(fake).map(|(r, f)| mean_abs_diff(r.data(), f.data())).sum())
}

/// Real and imaginary parts matched separately, each half-weighted.
pub fn feature_matching_complex(real: &[CTensor], fake: &[CTensor]) -> Result<f64> {
    check_pair_shapes(
        "feature_matching_complex",
        real.iter().map(|t| t.shape()),
        fake.iter().map(|t| t.shape()),
    )?;
    Ok(real
        .iter()
        .zip(fake)
        .map(|(r, f)| 0.5 * (mean_abs_diff(r.re(), f.re()) + mean_abs_diff(r.im(), f.im())))
        .sum())
}

/// Mean absolute difference of two log-mel spectrograms.
pub fn mel_l1(a: &RTensor, b: &RTensor) -> Result<f64> {
    feature_matching(std::slice::from_ref(a), std::slice::from_ref(b))
}

impl Tape {
    /// `mean(max(0, margin + sign·x))` of a real node.
    fn hinge_mean(&mut self, x: Var, sign: f64) -> Result<Var> {
        let s = self.scale(x, sign)?;
        let m = self.add_scalar(s, 1.0)?;
        let h = self.activation(m, Activation::Relu)?;
        self.mean(h)
    }

    fn sum_all(&mut self, terms: &[Var]) -> Result<Var> {
        let mut acc = *terms.first().ok_or_else(|| Error::Config("empty loss sum".into()))?;
        for &t in &terms[1..] {
            acc = self.add(acc, t)?;
        }
        Ok(acc)
    }

    pub fn hinge_d(&mut self, real: Var, fake: Var) -> Result<Var> {
        let a = self.hinge_mean(real, -1.0)?;
        let b = self.hinge_mean(fake, 1.0)?;
        self.add(a, b)
    }

    pub fn hinge_g(&mut self, fake: Var) -> Result<Var> {
        self.hinge_mean(fake, -1.0)
    }

    fn hinge_split(&mut self, z: Var, sign: f64) -> Result<Var> {
        let (x, y) = (self.re(z)?, self.im(z)?);
        let a = self.hinge_mean(x, sign)?;
        let b = self.hinge_mean(y, sign)?;
        let s = self.add(a, b)?;
        self.scale(s, 0.5)
    }

    pub fn hinge_d_complex(&mut self, real: Var, fake: Var) -> Result<Var> {
        let a = self.hinge_split(real, -1.0)?;
        let b = self.hinge_split(fake, 1.0)?;
        self.add(a, b)
    }

    pub fn hinge_g_complex(&mut self, fake: Var) -> Result<Var> {
        self.hinge_split(fake, -1.0)
    }

    /// Mean `|a − b|` of two real nodes.
    pub fn l1(&mut self, a: Var, b: Var) -> Result<Var> {
        let d = self.sub(a, b)?;
        let d = self.abs(d)?;
        self.mean(d)
    }

    /// Feature matching over paired layers; complex pairs use the split form.
    pub fn feature_matching(&mut self, pairs: &[(Var, Var)]) -> Result<Var> {
        let mut terms = Vec::with_capacity(pairs.len());
        for &(r, f) in pairs {
            let (vr, vf) = (self.value(r), self.value(f));
            if vr.shape() != vf.shape() || vr.is_complex() != vf.is_complex() {
                return Err(Error::ShapeMismatch {
                    op: "feature_matching",
                    lhs: vr.shape().clone(),
                    rhs: vf.shape().clone(),
                });
            }
            let t = if vr.is_complex() {
                let (rx, ry, fx, fy) = (self.re(r)?, self.im(r)?, self.re(f)?, self.im(f)?);
                let a = self.l1(rx, fx)?;
                let b = self.l1(ry, fy)?;
                let s = self.add(a, b)?;
                self.scale(s, 0.5)?
            } else {
                self.l1(r, f)?
            };
            terms.push(t);
        }
        self.sum_all(&terms)
    }

    /// Weighted generator objective from scalar nodes in [`GeneratorTerms`] order.
    pub fn total_generator_loss(&mut self, terms: [Var; 5], w: &LossWeights) -> Result<Var> {
        let [mel, g_mpd, fm_mpd, g_cmrd, fm_cmrd] = terms;
        let a = self.scale(mel, w.mel)?;
        let mpd = self.add(g_mpd, fm_mpd)?;
        let b = self.scale(mpd, w.mpd)?;
        let cmrd = self.add(g_cmrd, fm_cmrd)?;
        let c = self.scale(cmrd, w.cmrd)?;
        self.sum_all(&[a, b, c])
    }
}
