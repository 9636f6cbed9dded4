//! Backend-equivalence and finite-difference suites over random layer
//! configurations.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autograd::gradcheck::{check_params, relative_error, FD_STEP};
use crate::autograd::params::{ParamId, ParamStore};
use crate::autograd::tape::{GradPair, Tape, Var};
use crate::ctensor::{CTensor, RTensor, Shape};
use crate::error::Result;
use crate::kernels::ConvGeometry;
use crate::layers::norm::DEFAULT_EPS;
use crate::layers::{Activation, Backend, MagFn, ComplexConv1d, ComplexConv2d, ComplexLayerNorm, ComplexLinear, Layer, PhaseQuantizer};
use crate::losses::LossWeights;
use crate::signal::mel::MelFilterbank;
use crate::signal::stft::StftConfig;

pub const FORWARD_TOL: f64 = 1e-10;
pub const GRAD_TOL: f64 = 1e-8;
pub const GRADCHECK_TOL: f64 = 1e-5;
/// Random configurations per layer type that also get a finite-difference check.
pub const GRADCHECK_TRIALS: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerKind {
    Linear,
    Conv1d,
    Conv2d,
    LayerNorm,
    PhaseQuant,
}

impl LayerKind {
    pub const ALL: [LayerKind; 5] =
        [LayerKind::Linear, LayerKind::Conv1d, LayerKind::Conv2d, LayerKind::LayerNorm, LayerKind::PhaseQuant];

    pub fn name(self) -> &'static str {
        match self {
            LayerKind::Linear => "linear",
            LayerKind::Conv1d => "conv1d",
            LayerKind::Conv2d => "conv2d",
            LayerKind::LayerNorm => "layernorm",
            LayerKind::PhaseQuant => "pq",
        }
    }
}

impl fmt::Display for LayerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Metric {
    #[serde(rename = "Forward output")]
    Forward,
    #[serde(rename = "Input gradient")]
    InputGrad,
    #[serde(rename = "Weight gradient")]
    WeightGrad,
    #[serde(rename = "Bias gradient")]
    BiasGrad,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Forward, Metric::InputGrad, Metric::WeightGrad, Metric::BiasGrad];

    pub fn label(self) -> &'static str {
        match self {
            Metric::Forward => "Forward output",
            Metric::InputGrad => "Input gradient",
            Metric::WeightGrad => "Weight gradient",
            Metric::BiasGrad => "Bias gradient",
        }
    }

    pub fn tolerance(self) -> f64 {
        match self {
            Metric::Forward => FORWARD_TOL,
            _ => GRAD_TOL,
        }
    }
}

/// A deliberate defect for exercising the failure path.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Fault {
    #[default]
    None,
    /// Gauss linear layers compute `Im = t3 − t1 + t2`.
    GaussLinear,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EquivalenceRow {
    pub layer: LayerKind,
    pub lhs: Backend,
    pub rhs: Backend,
    pub metric: Metric,
    pub max_abs_diff: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GradcheckRow {
    pub subject: String,
    pub backend: Option<Backend>,
    pub max_rel_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub trials: usize,
    pub equivalence: Vec<EquivalenceRow>,
    pub gradcheck: Vec<GradcheckRow>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.equivalence.iter().all(|r| r.passed) && self.gradcheck.iter().all(|r| r.passed)
    }

    /// One line per breached tolerance.
    pub fn failures(&self) -> Vec<String> {
        let eq = self.equivalence.iter().filter(|r| !r.passed).map(|r| {
            format!(
                "{} {}/{} {}: {:.3e} > {:.0e}",
                r.layer,
                r.lhs,
                r.rhs,
                r.metric.label(),
                r.max_abs_diff,
                r.tolerance
            )
        });
        let gc = self.gradcheck.iter().filter(|r| !r.passed).map(|r| {
            let b = r.backend.map_or(String::new(), |b| format!(" {b}"));
            format!("gradcheck {}{b}: {:.3e} > {:.0e}", r.subject, r.max_rel_error, r.tolerance)
        });
        eq.chain(gc).collect()
    }

    /// Worst forward difference over every layer and backend pair.
    pub fn max_forward_diff(&self) -> f64 {
        self.max_of(|m| m == Metric::Forward)
    }

    pub fn max_grad_diff(&self) -> f64 {
        self.max_of(|m| m != Metric::Forward)
    }

    fn max_of(&self, keep: impl Fn(Metric) -> bool) -> f64 {
        self.equivalence.iter().filter(|r| keep(r.metric)).map(|r| r.max_abs_diff).fold(0.0, f64::max)
    }

    pub fn max_rel_error(&self) -> f64 {
        self.gradcheck.iter().map(|r| r.max_rel_error).fold(0.0, f64::max)
    }
}

fn random_c(rng: &mut ChaCha8Rng, shape: &[usize]) -> CTensor {
    let n: usize = shape.iter().product();
    let re = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let im = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    CTensor::from_raw(re, im, Shape::new(shape.to_vec()))
}

type LayerFactory = Box<dyn Fn(Backend) -> Box<dyn Layer>>;

/// A layer instance with everything needed to run it under any backend.
struct Case {
    kind: LayerKind,
    store: ParamStore,
    layer: LayerFactory,
    weight: Option<ParamId>,
    bias: Option<ParamId>,
    input: CTensor,
    /// Cotangent contracted with the output to form a real loss.
    probe: CTensor,
}

fn make_case(kind: LayerKind, rng: &mut ChaCha8Rng) -> Result<Case> {
    let mut store = ParamStore::new();
    let (layer, weight, bias, input): (LayerFactory, _, _, _) = match kind {
        LayerKind::Linear => {
            let (b, i, o) = (rng.random_range(1..5), rng.random_range(1..13), rng.random_range(1..13));
            let with_bias = rng.random_bool(0.7);
            let w = random_c(rng, &[o, i]);
            let bias = with_bias.then(|| random_c(rng, &[o]));
            let l = ComplexLinear::from_weights(&mut store, "lin", w, bias, Backend::Naive)?;
            let (wid, bid) = (l.weight, l.bias);
            (Box::new(move |be| Box::new(l.with_backend(be)) as Box<dyn Layer>), Some(wid), bid, random_c(rng, &[b, i]))
        }
        LayerKind::Conv1d => {
            let g = rng.random_range(1..4);
            let (c, o) = (g * rng.random_range(1..4), g * rng.random_range(1..4));
            let (k, s, d): (usize, usize, usize) = (rng.random_range(1..6), rng.random_range(1..4), rng.random_range(1..3));
            let p: usize = rng.random_range(0..3);
            let span = d * (k - 1) + 1;
            let len = (span.saturating_sub(2 * p)).max(1) + rng.random_range(0..12);
            let geom = ConvGeometry::one_d(s, p, d, g);
            let w = random_c(rng, &[o, c / g, k]);
            let bias = rng.random_bool(0.7).then(|| random_c(rng, &[o]));
            let l = ComplexConv1d::from_weights(&mut store, "conv", w, bias, geom, Backend::Naive)?;
            let (wid, bid) = (l.kernel, l.bias);
            let b = rng.random_range(1..3);
            (Box::new(move |be| Box::new(l.with_backend(be)) as Box<dyn Layer>), Some(wid), bid, random_c(rng, &[b, c, len]))
        }
        LayerKind::Conv2d => {
            let g = rng.random_range(1..3);
            let (c, o) = (g * rng.random_range(1..3), g * rng.random_range(1..3));
            let (kh, kw) = (rng.random_range(1..4), rng.random_range(1..4));
            let s = (rng.random_range(1..3), rng.random_range(1..3));
            let p = (rng.random_range(0..2), rng.random_range(0..2));
            let geom = ConvGeometry { stride: s, padding: p, dilation: (1, 1), groups: g };
            let (h, w_) = (kh + rng.random_range(0..6), kw + rng.random_range(0..6));
            let w = random_c(rng, &[o, c / g, kh, kw]);
            let bias = rng.random_bool(0.7).then(|| random_c(rng, &[o]));
            let l = ComplexConv2d::from_weights(&mut store, "conv", w, bias, geom, Backend::Naive)?;
            let (wid, bid) = (l.kernel, l.bias);
            let b = rng.random_range(1..3);
            (Box::new(move |be| Box::new(l.with_backend(be)) as Box<dyn Layer>), Some(wid), bid, random_c(rng, &[b, c, h, w_]))
        }
        LayerKind::LayerNorm => {
            let n = rng.random_range(2..10);
            let gamma = random_c(rng, &[n]);
            let beta = random_c(rng, &[n]);
            let (shape, axis) = if rng.random_bool(0.5) {
                (vec![rng.random_range(1..4), n], 1)
            } else {
                (vec![rng.random_range(1..3), n, rng.random_range(1..5)], 1)
            };
            let l = ComplexLayerNorm::from_weights(&mut store, "ln", gamma, beta, axis, DEFAULT_EPS, Backend::Naive)?;
            let (wid, bid) = (l.gamma, l.beta);
            (Box::new(move |be| Box::new(l.with_backend(be)) as Box<dyn Layer>), Some(wid), Some(bid), random_c(rng, &shape))
        }
        LayerKind::PhaseQuant => {
            let levels = [0, 4, 16, 128, 512][rng.random_range(0..5)];
            let n = rng.random_range(1..20);
            (Box::new(move |_| Box::new(PhaseQuantizer::new(levels)) as Box<dyn Layer>), None, None, random_c(rng, &[n]))
        }
    };
    // probe shape comes from one forward pass
    let out = layer(Backend::Naive).apply(&store, &input)?;
    let probe = random_c(rng, out.shape().dims());
    Ok(Case { kind, store, layer, weight, bias, input, probe })
}

/// `Σ Re(probe·y)`.
fn contract(tape: &mut Tape, y: Var, probe: &CTensor) -> Result<Var> {
    let p = tape.constant(probe.clone());
    let m = tape.mul(y, p)?;
    let r = tape.re(m)?;
    tape.sum(r)
}

/// The Gauss linear path with a sign error in the imaginary recombination.
fn faulty_gauss_linear(tape: &mut Tape, store: &ParamStore, l: &ComplexLinear, x: Var) -> Result<Var> {
    let w = tape.param(store, l.weight);
    let (wr, wi) = (tape.re(w)?, tape.im(w)?);
    let (xr, xi) = (tape.re(x)?, tape.im(x)?);
    let t1 = tape.linear(xr, wr)?;
    let t2 = tape.linear(xi, wi)?;
    let sx = tape.add(xr, xi)?;
    let sw = tape.add(wr, wi)?;
    let t3 = tape.linear(sx, sw)?;
    let re = tape.sub(t1, t2)?;
    let u = tape.sub(t3, t1)?;
    let im = tape.add(u, t2)?;
    let y = tape.merge(re, im)?;
    match l.bias {
        Some(b) => {
            let b = tape.param(store, b);
            tape.add(y, b)
        }
        None => Ok(y),
    }
}

struct Outcome {
    forward: CTensor,
    input: GradPair,
    weight: Option<GradPair>,
    bias: Option<GradPair>,
}

fn run_case(case: &mut Case, backend: Backend, fault: Fault) -> Result<Outcome> {
    let layer = (case.layer)(backend);
    let mut tape = Tape::new();
    let x = tape.input(case.input.clone());
    let y = if fault == Fault::GaussLinear && backend == Backend::Gauss && case.kind == LayerKind::Linear {
        // rebuild the layer handle from the stored ids
        let (w, b) = (case.weight.expect("linear weight"), case.bias);
        let dims = case.store.value(w).shape().dims().to_vec();
        let l = ComplexLinear {
            weight: w,
            bias: b,
            in_features: dims[1],
            out_features: dims[0],
            backend,
        };
        faulty_gauss_linear(&mut tape, &case.store, &l, x)?
    } else {
        layer.forward(&mut tape, &case.store, x)?
    };
    let loss = contract(&mut tape, y, &case.probe)?;
    let grads = tape.backward_into(loss, &mut case.store)?;
    let zero_in = || GradPair::zeros(case.input.shape());
    Ok(Outcome {
        forward: tape.complex(y)?.clone(),
        input: grads.pair(x).unwrap_or_else(zero_in),
        weight: case.weight.and_then(|id| case.store.grad(id).cloned()),
        bias: case.bias.and_then(|id| case.store.grad(id).cloned()),
    })
}

fn gradcheck_case(case: &mut Case, backend: Backend) -> Result<f64> {
    let layer = (case.layer)(backend);
    if case.kind == LayerKind::PhaseQuant {
        return gradcheck_ste(case, layer.as_ref());
    }
    // the input becomes a parameter so its gradient is checked too
    let input_id = case.store.add_complex("verify.input", case.input.clone());
    let mut ids: Vec<ParamId> = case.weight.into_iter().chain(case.bias).collect();
    ids.push(input_id);
    let probe = case.probe.clone();
    let report = check_params(&mut case.store, &ids, FD_STEP, |t, s| {
        let x = t.param(s, input_id);
        let y = layer.forward(t, s, x)?;
        contract(t, y, &probe)
    })?;
    Ok(report.max_rel_error)
}

/// The quantizer is piecewise constant, so its straight-through gradient is
/// compared with central differences of the identity it stands in for.
fn gradcheck_ste(case: &Case, layer: &dyn Layer) -> Result<f64> {
    let mut tape = Tape::new();
    let x = tape.input(case.input.clone());
    let y = layer.forward(&mut tape, &case.store, x)?;
    let loss = contract(&mut tape, y, &case.probe)?;
    let g = tape.backward(loss)?.pair(x).unwrap_or_else(|| GradPair::zeros(case.input.shape()));
    let surrogate = |z: &CTensor| -> Result<f64> {
        let mut t = Tape::new();
        let v = t.constant(z.clone());
        let l = contract(&mut t, v, &case.probe)?;
        t.scalar(l)
    };
    let mut worst = 0.0f64;
    for imag in [false, true] {
        let analytic = if imag { g.g_i.data() } else { g.g_r.data() };
        for (i, &a) in analytic.iter().enumerate() {
            let mut z = case.input.clone();
            let bump = |z: &mut CTensor, d: f64| {
                let (re, im) = z.planes_mut();
                if imag { im[i] += d } else { re[i] += d }
            };
            bump(&mut z, FD_STEP);
            let up = surrogate(&z)?;
            bump(&mut z, -2.0 * FD_STEP);
            let down = surrogate(&z)?;
            worst = worst.max(relative_error(a, (up - down) / (2.0 * FD_STEP)));
        }
    }
    Ok(worst)
}

/// Runs `trials` random configurations per layer type through every
/// backend pair, plus finite-difference checks on the first few.
pub fn run(seed: u64, trials: usize, fault: Fault) -> Result<VerifyReport> {
    let mut report = VerifyReport { seed, trials, ..Default::default() };
    if trials == 0 {
        return Ok(report);
    }
    let pairs = [(Backend::Naive, Backend::Gauss), (Backend::Naive, Backend::Block), (Backend::Gauss, Backend::Block)];
    for kind in LayerKind::ALL {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (kind as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let mut worst = [[0.0f64; 4]; 3];
        let mut seen = [false; 4];
        let mut gc_worst = [0.0f64; 3];
        for trial in 0..trials {
            let mut case = make_case(kind, &mut rng)?;
            let outs: Vec<Outcome> = Backend::ALL.iter().map(|&b| run_case(&mut case, b, fault)).collect::<Result<_>>()?;
            for (p, &(a, b)) in pairs.iter().enumerate() {
                let (oa, ob) = (&outs[a as usize], &outs[b as usize]);
                let diffs = [
                    Some(oa.forward.max_abs_diff(&ob.forward)),
                    Some(oa.input.max_abs_diff(&ob.input)),
                    oa.weight.as_ref().zip(ob.weight.as_ref()).map(|(x, y)| x.max_abs_diff(y)),
                    oa.bias.as_ref().zip(ob.bias.as_ref()).map(|(x, y)| x.max_abs_diff(y)),
                ];
                for (m, d) in diffs.into_iter().enumerate() {
                    if let Some(d) = d {
                        // NaN must register as a breach
                        worst[p][m] = if d.is_nan() { f64::INFINITY } else { worst[p][m].max(d) };
                        seen[m] = true;
                    }
                }
            }
            if trial < GRADCHECK_TRIALS {
                for (i, b) in Backend::ALL.into_iter().enumerate() {
                    let e = gradcheck_case(&mut case, b)?;
                    gc_worst[i] = gc_worst[i].max(if e.is_nan() { f64::INFINITY } else { e });
                }
            }
        }
        for (p, &(a, b)) in pairs.iter().enumerate() {
            for (m, metric) in Metric::ALL.into_iter().enumerate() {
                if !seen[m] {
                    continue;
                }
                let d = worst[p][m];
                report.equivalence.push(EquivalenceRow {
                    layer: kind,
                    lhs: a,
                    rhs: b,
                    metric,
                    max_abs_diff: d,
                    tolerance: metric.tolerance(),
                    passed: d <= metric.tolerance(),
                });
            }
        }
        for (i, b) in Backend::ALL.into_iter().enumerate() {
            report.gradcheck.push(GradcheckRow {
                subject: kind.name().to_string(),
                backend: Some(b),
                max_rel_error: gc_worst[i],
                tolerance: GRADCHECK_TOL,
                passed: gc_worst[i] <= GRADCHECK_TOL,
            });
        }
    }
    report.gradcheck.extend(gradcheck_functions(seed)?);
    Ok(report)
}

/// Finite-difference checks of the activations, the adversarial,
/// feature-matching and mel-reconstruction losses, and the STFT pair.
pub fn gradcheck_functions(seed: u64) -> Result<Vec<GradcheckRow>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x1055);
    let mut rows = Vec::new();
    let mut push = |subject: &str, e: f64| {
        rows.push(GradcheckRow {
            subject: subject.to_string(),
            backend: None,
            max_rel_error: e,
            tolerance: GRADCHECK_TOL,
            passed: e <= GRADCHECK_TOL,
        })
    };

    // scores kept away from the hinge kinks at ±1
    let away = |rng: &mut ChaCha8Rng, n: usize| -> Vec<f64> {
        (0..n)
            .map(|_| {
                let v: f64 = rng.random_range(0.1..0.8);
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                sign * (1.0 + v * if rng.random_bool(0.5) { 1.0 } else { -1.0 })
            })
            .collect()
    };
    // split activations see no zero entries and modReLU no |z| near its threshold
    let mut store = ParamStore::new();
    let (re, im) = (away(&mut rng, 12), away(&mut rng, 12));
    let z = store.add_complex("z", CTensor::new(re, im, [3, 4])?);
    let thr = store.add_real("threshold", RTensor::new(vec![0.1, -0.2, 0.05], [3, 1])?);
    let probe = random_c(&mut rng, &[3, 4]);
    let ids = store.ids();
    let r = check_params(&mut store, &ids, FD_STEP, |t, s| {
        let x = t.param(s, z);
        let outs = [
            t.split_activation(x, Activation::Gelu)?,
            t.split_activation(x, Activation::LeakyRelu(0.2))?,
            t.split_activation(x, Activation::Tanh)?,
            t.mag_activation(x, MagFn::Tanh)?,
            t.mag_activation(x, MagFn::ModRelu(-0.05))?,
            {
                let b = t.param(s, thr);
                t.mod_relu(x, b)?
            },
        ];
        let mut acc = contract(t, outs[0], &probe)?;
        for &o in &outs[1..] {
            let c = contract(t, o, &probe)?;
            acc = t.add(acc, c)?;
        }
        Ok(acc)
    })?;
    push("activations", r.max_rel_error);

    let mut store = ParamStore::new();
    let sr = store.add_real("sr", RTensor::from_vec(away(&mut rng, 6)));
    let sf = store.add_real("sf", RTensor::from_vec(away(&mut rng, 6)));
    let (re, im) = (away(&mut rng, 5), away(&mut rng, 5));
    let zr = store.add_complex("zr", CTensor::new(re, im, [5])?);
    let (re, im) = (away(&mut rng, 5), away(&mut rng, 5));
    let zf = store.add_complex("zf", CTensor::new(re, im, [5])?);
    let ids = store.ids();
    let r = check_params(&mut store, &ids, FD_STEP, |t, s| {
        let (a, b, p, q) = (t.param(s, sr), t.param(s, sf), t.param(s, zr), t.param(s, zf));
        let terms = [t.hinge_d(a, b)?, t.hinge_g(b)?, t.hinge_d_complex(p, q)?, t.hinge_g_complex(q)?, t.feature_matching(&[(a, b), (p, q)])?];
        t.total_generator_loss(terms, &LossWeights::default())
    })?;
    push("losses", r.max_rel_error);

    let cfg = StftConfig::new(64, 16, 48)?;
    let fb = MelFilterbank::new(8, 64, 8000.0, 0.0, 4000.0)?;
    let len = 96;
    let mut store = ParamStore::new();
    let wave = store.add_real("wave", RTensor::from_vec((0..len).map(|_| rng.random_range(-1.0..1.0)).collect()));
    let target = RTensor::new((0..cfg.frames(len) * 8).map(|_| rng.random_range(-3.0..1.0)).collect(), [cfg.frames(len), 8])?;
    let ids = store.ids();
    let r = check_params(&mut store, &ids, FD_STEP, |t, s| {
        let w = t.param(s, wave);
        let lm = t.log_mel(w, &cfg, &fb)?;
        let tg = t.constant(target.clone());
        t.l1(lm, tg)
    })?;
    push("mel_l1", r.max_rel_error);

    let mut store = ParamStore::new();
    let spec = store.add_complex("spec", random_c(&mut rng, &[cfg.frames(len), cfg.bins()]));
    let probe = RTensor::from_vec((0..len).map(|_| rng.random_range(-1.0..1.0)).collect());
    let ids = store.ids();
    let r = check_params(&mut store, &ids, FD_STEP, |t, s| {
        let x = t.param(s, spec);
        let y = t.istft(x, &cfg, Some(len))?;
        let p = t.constant(probe.clone());
        let m = t.mul(y, p)?;
        let st = t.stft(m, &cfg)?;
        let a = t.cabs(st)?;
        t.sum(a)
    })?;
    push("stft/istft", r.max_rel_error);
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_trials_is_empty_and_passes() {
        let r = run(0, 0, Fault::None).unwrap();
        assert!(r.equivalence.is_empty() && r.gradcheck.is_empty());
        assert!(r.passed());
    }

    #[test]
    fn small_run_passes_with_every_metric() {
        let r = run(7, 8, Fault::None).unwrap();
        assert!(r.passed(), "{:?}", r.failures());
        for kind in [LayerKind::Linear, LayerKind::Conv1d, LayerKind::Conv2d, LayerKind::LayerNorm] {
            for m in Metric::ALL {
                assert!(r.equivalence.iter().any(|row| row.layer == kind && row.metric == m), "{kind} {m:?}");
            }
        }
        assert_eq!(r.gradcheck.len(), 5 * 3 + 4);
    }

    #[test]
    fn injected_gauss_fault_is_named() {
        let r = run(1, 3, Fault::GaussLinear).unwrap();
        assert!(!r.passed());
        let f = r.failures();
        assert!(f.iter().all(|l| l.starts_with("linear") && l.contains("gauss")), "{f:?}");
        assert!(f.iter().any(|l| l.contains("naive/gauss")));
    }
}
