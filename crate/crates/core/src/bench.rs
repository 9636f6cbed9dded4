//! Forward/backward timing and backward-graph size of a generator-like and a
//! discriminator-like stack under each backend.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autograd::params::ParamStore;
use crate::autograd::tape::{Tape, Var};
use crate::ctensor::{CTensor, Shape};
use crate::error::{Error, Result};
use crate::kernels::ConvGeometry;
use crate::layers::{Activation, Backend, ComplexConv1d, ComplexConv2d, ComplexLinear, Layer};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub repeats: usize,
    /// Untimed runs before the timed ones.
    pub warmup: usize,
    pub seed: u64,
    pub gen_batch: usize,
    pub gen_channels: usize,
    pub gen_length: usize,
    /// Alternating conv1d and pointwise linear layers.
    pub gen_layers: usize,
    pub gen_kernel: usize,
    pub disc_batch: usize,
    pub disc_channels: usize,
    /// `(frames, bins)` of each discriminator scale.
    pub disc_scales: Vec<(usize, usize)>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            repeats: 10,
            warmup: 2,
            seed: 0,
            gen_batch: 4,
            gen_channels: 32,
            gen_length: 256,
            gen_layers: 8,
            gen_kernel: 7,
            disc_batch: 2,
            disc_channels: 16,
            disc_scales: vec![(64, 33), (32, 65), (16, 129)],
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.repeats < 3 {
            return Err(Error::Config(format!("bench needs at least 3 repeats, got {}", self.repeats)));
        }
        let sizes = [self.gen_batch, self.gen_channels, self.gen_length, self.gen_layers, self.gen_kernel, self.disc_batch, self.disc_channels];
        if sizes.contains(&0) || self.disc_scales.is_empty() || self.disc_scales.iter().any(|&(f, b)| f < 3 || b < 9) {
            return Err(Error::Config("bench sizes must be positive; discriminator scales at least 3x9".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BackendTiming {
    pub backend: Backend,
    /// Tape length for one forward pass plus the scalar loss.
    pub nodes: usize,
    pub forward_median_s: f64,
    pub backward_median_s: f64,
    pub forward_mean_s: f64,
    pub backward_mean_s: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StackReport {
    pub name: String,
    pub timings: Vec<BackendTiming>,
}

impl StackReport {
    pub fn timing(&self, b: Backend) -> &BackendTiming {
        self.timings.iter().find(|t| t.backend == b).expect("every backend is timed")
    }

    pub fn node_ratio(&self) -> f64 {
        self.timing(Backend::Block).nodes as f64 / self.timing(Backend::Naive).nodes as f64
    }

    pub fn backward_ratio(&self) -> f64 {
        self.timing(Backend::Block).backward_median_s / self.timing(Backend::Naive).backward_median_s
    }
}

/// Largest acceptable Block/Naive node ratio on each stack.
pub const GEN_NODE_RATIO_MAX: f64 = 0.5;
pub const DISC_NODE_RATIO_MAX: f64 = 0.4;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
}

impl Check {
    fn at_most(name: &str, value: f64, limit: f64) -> Check {
        Check { name: name.to_string(), value, limit, passed: value <= limit }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub generator: StackReport,
    pub discriminator: StackReport,
}

impl BenchReport {
    /// Node-count reductions and the Block-vs-Naive backward ordering.
    /// Gauss is reported but not checked.
    pub fn checks(&self) -> Vec<Check> {
        let (g, d) = (&self.generator, &self.discriminator);
        vec![
            Check::at_most("generator node ratio block/naive", g.node_ratio(), GEN_NODE_RATIO_MAX),
            Check::at_most("discriminator node ratio block/naive", d.node_ratio(), DISC_NODE_RATIO_MAX),
            Check::at_most("generator backward time block/naive", g.backward_ratio(), 1.0),
            Check::at_most("discriminator backward time block/naive", d.backward_ratio(), 1.0),
        ]
    }

    pub fn passed(&self) -> bool {
        self.checks().iter().all(|c| c.passed)
    }
}

/// A stack whose layers can be re-targeted to any backend.
trait Stack {
    fn forward(&self, tape: &mut Tape, store: &ParamStore, backend: Backend, inputs: &[CTensor]) -> Result<Var>;
}

enum GenLayer {
    Conv(ComplexConv1d),
    Linear(ComplexLinear),
}

struct Generator {
    layers: Vec<GenLayer>,
}

impl Generator {
    fn new(cfg: &BenchConfig, store: &mut ParamStore, rng: &mut ChaCha8Rng) -> Result<Self> {
        let c = cfg.gen_channels;
        let k = cfg.gen_kernel;
        let layers = (0..cfg.gen_layers)
            .map(|i| {
                let name = format!("gen.{i}");
                Ok(if i % 2 == 0 {
                    let geom = ConvGeometry::one_d(1, k / 2, 1, 1);
                    GenLayer::Conv(ComplexConv1d::new(store, &name, c, c, k, geom, true, Backend::Naive, rng)?)
                } else {
                    GenLayer::Linear(ComplexLinear::new(store, &name, c, c, true, Backend::Naive, rng))
                })
            })
            .collect::<Result<_>>()?;
        Ok(Generator { layers })
    }
}

impl Stack for Generator {
    fn forward(&self, tape: &mut Tape, store: &ParamStore, backend: Backend, inputs: &[CTensor]) -> Result<Var> {
        let mut h = tape.input(inputs[0].clone());
        for layer in &self.layers {
            h = match layer {
                GenLayer::Conv(l) => l.with_backend(backend).forward(tape, store, h)?,
                GenLayer::Linear(l) => {
                    // channels-last for the dense layer, then back
                    let t = tape.transpose(h)?;
                    let t = l.with_backend(backend).forward(tape, store, t)?;
                    tape.transpose(t)?
                }
            };
            h = tape.split_activation(h, Activation::Gelu)?;
        }
        let m = tape.cabs(h)?;
        tape.mean(m)
    }
}

struct Discriminator {
    /// One conv2d stack per scale.
    scales: Vec<Vec<ComplexConv2d>>,
}

impl Discriminator {
    fn new(cfg: &BenchConfig, store: &mut ParamStore, rng: &mut ChaCha8Rng) -> Result<Self> {
        let c = cfg.disc_channels;
        let scales = (0..cfg.disc_scales.len())
            .map(|s| {
                let specs: [(usize, usize, (usize, usize), ConvGeometry); 5] = [
                    (1, c, (3, 9), geom((1, 1), (1, 4))),
                    (c, c, (3, 9), geom((1, 2), (1, 4))),
                    (c, c, (3, 9), geom((1, 2), (1, 4))),
                    (c, c, (3, 3), geom((1, 1), (1, 1))),
                    (c, 1, (3, 3), geom((1, 1), (1, 1))),
                ];
                specs
                    .iter()
                    .enumerate()
                    .map(|(i, &(ci, co, k, g))| {
                        ComplexConv2d::new(store, &format!("disc.{s}.{i}"), ci, co, k, g, true, Backend::Naive, rng)
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        Ok(Discriminator { scales })
    }
}

fn geom(stride: (usize, usize), padding: (usize, usize)) -> ConvGeometry {
    ConvGeometry { stride, padding, ..Default::default() }
}

impl Stack for Discriminator {
    fn forward(&self, tape: &mut Tape, store: &ParamStore, backend: Backend, inputs: &[CTensor]) -> Result<Var> {
        let mut total: Option<Var> = None;
        for (layers, x) in self.scales.iter().zip(inputs) {
            let mut h = tape.input(x.clone());
            for (i, l) in layers.iter().enumerate() {
                h = l.with_backend(backend).forward(tape, store, h)?;
                if i + 1 < layers.len() {
                    h = tape.split_activation(h, Activation::LeakyRelu(0.1))?;
                }
            }
            let s = tape.re(h)?;
            let s = tape.mean(s)?;
            total = Some(match total {
                Some(t) => tape.add(t, s)?,
                None => s,
            });
        }
        Ok(total.expect("at least one scale"))
    }
}

fn uniform_complex(rng: &mut ChaCha8Rng, shape: impl Into<Shape>) -> CTensor {
    let shape = shape.into();
    let n = shape.numel();
    let re = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let im = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    CTensor::from_raw(re, im, shape)
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

fn time_stack(name: &str, stack: &dyn Stack, store: &ParamStore, inputs: &[CTensor], cfg: &BenchConfig) -> Result<StackReport> {
    let mut timings = Vec::new();
    for backend in Backend::ALL {
        let (mut fwd, mut bwd) = (Vec::new(), Vec::new());
        let mut nodes = 0;
        for run in 0..cfg.warmup + cfg.repeats {
            let t0 = Instant::now();
            let mut tape = Tape::new();
            let loss = stack.forward(&mut tape, store, backend, inputs)?;
            let t1 = Instant::now();
            let grads = tape.backward(loss)?;
            let t2 = Instant::now();
            std::hint::black_box(&grads);
            nodes = tape.node_count();
            if run >= cfg.warmup {
                fwd.push((t1 - t0).as_secs_f64());
                bwd.push((t2 - t1).as_secs_f64());
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        timings.push(BackendTiming {
            backend,
            nodes,
            forward_mean_s: mean(&fwd),
            backward_mean_s: mean(&bwd),
            forward_median_s: median(&mut fwd),
            backward_median_s: median(&mut bwd),
        });
    }
    Ok(StackReport { name: name.to_string(), timings })
}

/// Backends are timed one after another within each stack, every backend
/// using the same weights and inputs.
pub fn run(cfg: &BenchConfig) -> Result<BenchReport> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut store = ParamStore::new();
    let gen = Generator::new(cfg, &mut store, &mut rng)?;
    let disc = Discriminator::new(cfg, &mut store, &mut rng)?;
    let gen_in = [uniform_complex(&mut rng, [cfg.gen_batch, cfg.gen_channels, cfg.gen_length])];
    let disc_in: Vec<CTensor> =
        cfg.disc_scales.iter().map(|&(f, b)| uniform_complex(&mut rng, [cfg.disc_batch, 1, f, b])).collect();
    Ok(BenchReport {
        config: cfg.clone(),
        generator: time_stack("generator", &gen, &store, &gen_in, cfg)?,
        discriminator: time_stack("discriminator", &disc, &store, &disc_in, cfg)?,
    })
}
