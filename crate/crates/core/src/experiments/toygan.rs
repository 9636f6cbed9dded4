//! Small MLP GANs on a complex target: a complex-valued model against a
//! real-valued one with doubled width.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::autograd::optim::{Adam, Optimizer};
use crate::autograd::params::{ParamId, ParamStore};
use crate::autograd::tape::{Tape, Value, Var};
use crate::ctensor::{phase, CTensor, RTensor, Shape};
use crate::error::{Error, Result};
use crate::layers::{Activation, Backend, ComplexLinear, Layer, RealLinear};
use crate::losses::{jsd_1d, KdeConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Cvnn,
    Rvnn,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Cvnn => "cvnn",
            Mode::Rvnn => "rvnn",
        })
    }
}

/// Hyperparameters shared by both model families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSettings {
    pub steps: usize,
    pub lr: f64,
    pub betas: (f64, f64),
    pub batch: usize,
    /// Number of linear layers in each network.
    pub depth: usize,
    /// Complex width; the real model uses twice this.
    pub width: usize,
    pub leaky_slope: f64,
    pub eval_samples: usize,
    pub backend: Backend,
}

impl Default for TrainSettings {
    fn default() -> Self {
        TrainSettings {
            steps: 1500,
            lr: 1e-3,
            betas: (0.5, 0.9),
            batch: 128,
            depth: 4,
            width: 128,
            leaky_slope: 0.2,
            eval_samples: 10_000,
            backend: Backend::Block,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GanConfig {
    pub mode: Mode,
    pub settings: TrainSettings,
    pub seed: u64,
}

impl GanConfig {
    pub fn new(mode: Mode, settings: TrainSettings, seed: u64) -> Self {
        GanConfig { mode, settings, seed }
    }

    pub fn hidden(&self) -> usize {
        match self.mode {
            Mode::Cvnn => self.settings.width,
            Mode::Rvnn => 2 * self.settings.width,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.settings;
        if s.depth < 2 || s.width == 0 || s.batch == 0 || !(s.lr > 0.0) {
            return Err(Error::Config(format!("invalid GAN settings {s:?}")));
        }
        Ok(())
    }
}

/// Sizes used for the memory comparison between model families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Footprint {
    /// Stored real scalars (a complex parameter counts twice).
    pub param_scalars: usize,
    /// Real scalars of hidden activations held per sample.
    pub activation_scalars: usize,
}

/// Generator or discriminator of either family.
pub enum Mlp {
    Complex(Vec<ComplexLinear>),
    Real(Vec<RealLinear>),
}

impl Mlp {
    /// `dims` are layer widths in the family's own units (complex or real).
    fn build(store: &mut ParamStore, name: &str, cfg: &GanConfig, dims: &[usize], rng: &mut ChaCha8Rng) -> Result<Self> {
        Ok(match cfg.mode {
            Mode::Cvnn => Mlp::Complex(
                dims.windows(2)
                    .enumerate()
                    .map(|(k, w)| ComplexLinear::new(store, &format!("{name}.{k}"), w[0], w[1], true, cfg.settings.backend, rng))
                    .collect(),
            ),
            Mode::Rvnn => Mlp::Real(
                dims.windows(2)
                    .enumerate()
                    .map(|(k, w)| RealLinear::new(store, &format!("{name}.{k}"), w[0], w[1], true, rng))
                    .collect(),
            ),
        })
    }

    pub fn params(&self) -> Vec<ParamId> {
        match self {
            Mlp::Complex(ls) => ls.iter().flat_map(|l| l.params()).collect(),
            Mlp::Real(ls) => ls.iter().flat_map(|l| l.params()).collect(),
        }
    }

    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, mut x: Var, slope: f64) -> Result<Var> {
        let act = Activation::LeakyRelu(slope);
        match self {
            Mlp::Complex(ls) => {
                for (k, l) in ls.iter().enumerate() {
                    x = l.forward(tape, store, x)?;
                    if k + 1 < ls.len() {
                        x = tape.split_activation(x, act)?;
                    }
                }
            }
            Mlp::Real(ls) => {
                for (k, l) in ls.iter().enumerate() {
                    x = l.forward(tape, store, x)?;
                    if k + 1 < ls.len() {
                        x = tape.activation(x, act)?;
                    }
                }
            }
        }
        Ok(x)
    }

    fn hidden_scalars(&self) -> usize {
        match self {
            Mlp::Complex(ls) => 2 * ls[..ls.len() - 1].iter().map(|l| l.out_features).sum::<usize>(),
            Mlp::Real(ls) => ls[..ls.len() - 1].iter().map(|l| l.out_features).sum(),
        }
    }
}

/// Packs complex samples in the family's native layout: `[B, 1]` complex or
/// `[B, 2]` real.
fn encode(mode: Mode, z: &CTensor) -> Value {
    let n = z.len();
    match mode {
        Mode::Cvnn => Value::Complex(z.reshape([n, 1]).expect("same length")),
        Mode::Rvnn => {
            let d = z.re().iter().zip(z.im()).flat_map(|(&x, &y)| [x, y]).collect();
            Value::Real(RTensor::from_raw(d, Shape::new([n, 2])))
        }
    }
}

fn decode(mode: Mode, v: &Value) -> Result<CTensor> {
    match mode {
        Mode::Cvnn => {
            let c = v.as_complex("decode")?;
            c.reshape([c.len()])
        }
        Mode::Rvnn => {
            let r = v.as_real("decode")?;
            let (re, im) = r.data().chunks_exact(2).map(|p| (p[0], p[1])).unzip();
            CTensor::new(re, im, [r.len() / 2])
        }
    }
}

/// Real logit from a discriminator output: the real part for the complex model.
fn logit(tape: &mut Tape, mode: Mode, d: Var) -> Result<Var> {
    match mode {
        Mode::Cvnn => tape.re(d),
        Mode::Rvnn => Ok(d),
    }
}

pub struct Gan {
    pub cfg: GanConfig,
    pub store: ParamStore,
    pub generator: Mlp,
    pub discriminator: Mlp,
}

impl Gan {
    pub fn new(cfg: GanConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut store = ParamStore::new();
        let (h, depth) = (cfg.hidden(), cfg.settings.depth);
        let widths = |i: usize, o: usize| -> Vec<usize> {
            std::iter::once(i).chain(std::iter::repeat_n(h, depth - 1)).chain([o]).collect()
        };
        // the real family carries (re, im) as two channels and ends in one logit
        let (g_dims, d_dims) = match cfg.mode {
            Mode::Cvnn => (widths(1, 1), widths(1, 1)),
            Mode::Rvnn => (widths(2, 2), widths(2, 1)),
        };
        let generator = Mlp::build(&mut store, "g", &cfg, &g_dims, &mut rng)?;
        let discriminator = Mlp::build(&mut store, "d", &cfg, &d_dims, &mut rng)?;
        Ok(Gan { cfg, store, generator, discriminator })
    }

    pub fn footprint(&self) -> Footprint {
        Footprint {
            param_scalars: self.store.scalar_count(&self.generator.params()),
            activation_scalars: self.generator.hidden_scalars(),
        }
    }

    /// Generator samples for the given latent draws.
    pub fn generate(&self, latent: &CTensor) -> Result<CTensor> {
        let mut tape = Tape::new();
        let x = tape.constant(encode(self.cfg.mode, latent));
        let y = self.generator.forward(&mut tape, &self.store, x, self.cfg.settings.leaky_slope)?;
        decode(self.cfg.mode, tape.value(y))
    }

    fn d_logit(&self, tape: &mut Tape, x: Var) -> Result<Var> {
        let d = self.discriminator.forward(tape, &self.store, x, self.cfg.settings.leaky_slope)?;
        logit(tape, self.cfg.mode, d)
    }

    /// One discriminator update followed by one generator update; returns
    /// `(d_loss, g_loss)`.
    fn step(&mut self, real: &CTensor, latent: &CTensor, opt_d: &mut Adam, opt_g: &mut Adam) -> Result<(f64, f64)> {
        let mode = self.cfg.mode;
        let fake = self.generate(latent)?;

        let mut tape = Tape::new();
        let xr = tape.constant(encode(mode, real));
        let xf = tape.constant(encode(mode, &fake));
        let lr = self.d_logit(&mut tape, xr)?;
        let lf = self.d_logit(&mut tape, xf)?;
        let a = tape.bce_with_logits(lr, 1.0)?;
        let b = tape.bce_with_logits(lf, 0.0)?;
        let d_loss = tape.add(a, b)?;
        tape.backward_into(d_loss, &mut self.store)?;
        opt_d.step(&mut self.store, &self.discriminator.params())?;
        let d_val = tape.scalar(d_loss)?;

        let mut tape = Tape::new();
        let z = tape.constant(encode(mode, latent));
        let g = self.generator.forward(&mut tape, &self.store, z, self.cfg.settings.leaky_slope)?;
        let l = self.d_logit(&mut tape, g)?;
        let g_loss = tape.bce_with_logits(l, 1.0)?;
        tape.backward_into(g_loss, &mut self.store)?;
        opt_g.step(&mut self.store, &self.generator.params())?;
        Ok((d_val, tape.scalar(g_loss)?))
    }
}

/// Standard complex normal draws (`re, im ~ N(0, 1)`), shared by both families.
pub fn latent<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CTensor {
    let d = Normal::new(0.0, 1.0).expect("unit normal");
    let re = (0..n).map(|_| d.sample(rng)).collect();
    let im = (0..n).map(|_| d.sample(rng)).collect();
    CTensor::from_raw(re, im, Shape::new([n]))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub mode: Mode,
    pub seed: u64,
    pub steps_completed: usize,
    pub jsd_mag: Option<f64>,
    pub jsd_phase: Option<f64>,
    pub d_loss: Vec<f64>,
    pub g_loss: Vec<f64>,
    pub footprint: Footprint,
    /// Set when training diverged or evaluation failed.
    pub failure: Option<String>,
    #[serde(skip)]
    pub samples: Option<CTensor>,
}

impl RunReport {
    pub fn succeeded(&self) -> bool {
        self.failure.is_none()
    }
}

/// Median and sample standard deviation of one metric across seeds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub median: f64,
    /// Absent with a single seed.
    pub std: Option<f64>,
    pub n: usize,
}

impl Spread {
    pub fn of(values: &[f64]) -> Option<Spread> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let median = if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) };
        let std = (n > 1).then(|| {
            let mean = v.iter().sum::<f64>() / n as f64;
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        });
        Some(Spread { median, std, n })
    }
}

impl fmt::Display for Spread {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.std {
            Some(s) => write!(f, "{:.6} ± {:.6}", self.median, s),
            None => write!(f, "{:.6}", self.median),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModeSummary {
    pub mode: Mode,
    pub jsd_mag: Option<Spread>,
    pub jsd_phase: Option<Spread>,
    pub failed: usize,
}

/// Per-family summary over the runs of `mode`; failed runs only count
/// towards `failed`.
pub fn summarize(reports: &[RunReport], mode: Mode) -> ModeSummary {
    let ok: Vec<&RunReport> = reports.iter().filter(|r| r.mode == mode && r.succeeded()).collect();
    let failed = reports.iter().filter(|r| r.mode == mode && !r.succeeded()).count();
    let pick = |f: fn(&RunReport) -> Option<f64>| Spread::of(&ok.iter().filter_map(|r| f(r)).collect::<Vec<_>>());
    ModeSummary {
        mode,
        jsd_mag: pick(|r| r.jsd_mag),
        jsd_phase: pick(|r| r.jsd_phase),
        failed,
    }
}

/// Magnitude and phase JSD between generated and target samples.
pub fn marginal_jsd(generated: &CTensor, target: &CTensor, kde: &KdeConfig) -> Result<(f64, f64)> {
    let split = |z: &CTensor| -> (Vec<f64>, Vec<f64>) {
        (0..z.len())
            .map(|k| {
                let (x, y) = z.get(k);
                (x.hypot(y), phase(x, y))
            })
            .unzip()
    };
    let (gm, gp) = split(generated);
    let (tm, tp) = split(target);
    Ok((jsd_1d(&gm, &tm, kde)?, jsd_1d(&gp, &tp, kde)?))
}

/// Trains one model on minibatches drawn from `target` and evaluates it
/// against the whole set. Divergence is recorded in the report, not
/// returned as an error.
pub fn train_toy_gan(cfg: &GanConfig, target: &CTensor) -> Result<RunReport> {
    let mut gan = Gan::new(cfg.clone())?;
    let s = cfg.settings.clone();
    // latent and minibatch streams are independent of the model family
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_da7a);
    let mut opt_d = Adam::new(s.lr, s.betas);
    let mut opt_g = Adam::new(s.lr, s.betas);
    let mut report = RunReport {
        mode: cfg.mode,
        seed: cfg.seed,
        steps_completed: 0,
        jsd_mag: None,
        jsd_phase: None,
        d_loss: Vec::with_capacity(s.steps),
        g_loss: Vec::with_capacity(s.steps),
        footprint: gan.footprint(),
        failure: None,
        samples: None,
    };
    let n = target.len();
    for step in 0..s.steps {
        let idx: Vec<usize> = (0..s.batch).map(|_| rng.random_range(0..n)).collect();
        let real = CTensor::from_raw(
            idx.iter().map(|&i| target.re()[i]).collect(),
            idx.iter().map(|&i| target.im()[i]).collect(),
            Shape::new([s.batch]),
        );
        let z = latent(&mut rng, s.batch);
        let (d, g) = gan.step(&real, &z, &mut opt_d, &mut opt_g)?;
        if !(d.is_finite() && g.is_finite()) {
            report.failure = Some(Error::Diverged { step, reason: format!("d_loss={d} g_loss={g}") }.to_string());
            return Ok(report);
        }
        report.d_loss.push(d);
        report.g_loss.push(g);
        report.steps_completed = step + 1;
    }
    let samples = gan.generate(&latent(&mut rng, s.eval_samples))?;
    match marginal_jsd(&samples, target, &KdeConfig::default()) {
        Ok((m, p)) => {
            report.jsd_mag = Some(m);
            report.jsd_phase = Some(p);
        }
        Err(e) => report.failure = Some(format!("evaluation failed: {e}")),
    }
    report.samples = Some(samples);
    Ok(report)
}

/// Writes `re,im,mag,phase` rows.
pub fn write_samples_csv<W: std::io::Write>(z: &CTensor, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["re", "im", "mag", "phase"])?;
    for k in 0..z.len() {
        let (x, y) = z.get(k);
        out.write_record([x, y, x.hypot(y), phase(x, y)].map(|v| format!("{v:?}")))?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::spiral::{sample_target, SpiralConfig};

    fn quick(mode: Mode, steps: usize) -> GanConfig {
        let settings = TrainSettings { steps, width: 16, batch: 64, eval_samples: 2000, ..Default::default() };
        GanConfig::new(mode, settings, 3)
    }

    #[test]
    fn families_share_everything_but_width() {
        let (c, r) = (quick(Mode::Cvnn, 10), quick(Mode::Rvnn, 10));
        assert_eq!(c.settings, r.settings);
        assert_eq!(r.hidden(), 2 * c.hidden());
    }

    #[test]
    fn hidden_activation_memory_matches() {
        let (c, r) = (Gan::new(quick(Mode::Cvnn, 0)).unwrap(), Gan::new(quick(Mode::Rvnn, 0)).unwrap());
        assert_eq!(c.footprint().activation_scalars, r.footprint().activation_scalars);
        // complex 1→16→16→16→1 with biases, counted as real scalars
        assert_eq!(c.footprint().param_scalars, 2 * (16 + 16 + 2 * (16 * 16 + 16) + 16 + 1));
    }

    #[test]
    fn untrained_generator_misses_the_target() {
        let target = sample_target(&SpiralConfig::default()).unwrap();
        for mode in [Mode::Cvnn, Mode::Rvnn] {
            let rep = train_toy_gan(&quick(mode, 0), &target).unwrap();
            assert!(rep.jsd_mag.unwrap() > 0.1, "{mode}: {:?}", rep.jsd_mag);
        }
    }

    #[test]
    fn deterministic_and_bounded() {
        let target = sample_target(&SpiralConfig { n_samples: 2000, ..Default::default() }).unwrap();
        let cfg = quick(Mode::Cvnn, 20);
        let (a, b) = (train_toy_gan(&cfg, &target).unwrap(), train_toy_gan(&cfg, &target).unwrap());
        assert_eq!(a.d_loss, b.d_loss);
        assert_eq!(a.samples, b.samples);
        assert_eq!(a.jsd_phase.map(f64::to_bits), b.jsd_phase.map(f64::to_bits));
        for j in [a.jsd_mag.unwrap(), a.jsd_phase.unwrap()] {
            assert!((0.0..=std::f64::consts::LN_2).contains(&j));
        }
        assert!(a.d_loss.iter().all(|&l| l > 0.0 && l < 10.0));
    }

    #[test]
    fn sample_csv_has_expected_columns() {
        let z = CTensor::from_pairs(&[(0.0, -1.0), (3.0, 4.0)]);
        let mut buf = Vec::new();
        write_samples_csv(&z, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("re,im,mag,phase"));
        lines.next();
        assert_eq!(lines.next(), Some("3.0,4.0,5.0,0.9272952180016122"));
    }

    #[test]
    fn spread_median_and_sample_std() {
        let s = Spread::of(&[3.0, 1.0, 2.0, 10.0]).unwrap();
        assert_eq!(s.median, 2.5);
        // mean 4, squared deviations 1 + 9 + 4 + 36
        assert!((s.std.unwrap() - (50.0f64 / 3.0).sqrt()).abs() < 1e-12);
        let one = Spread::of(&[0.25]).unwrap();
        assert_eq!((one.median, one.std), (0.25, None));
        assert_eq!(one.to_string(), "0.250000");
        assert!(Spread::of(&[]).is_none());
    }
}
