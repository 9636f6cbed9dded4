//! Python bindings: complex tensors, the three linear backends, phase
//! quantization, STFT, losses and the verify/bench reports.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use cvnn::autograd::params::ParamStore;
use cvnn::autograd::tape::Tape;
use cvnn::ctensor::phase;
use cvnn::layers::{Backend, ComplexLinear, Layer};
use cvnn::losses::{GeneratorTerms, KdeConfig, LossWeights};
use cvnn::signal::StftConfig;

fn err(e: cvnn::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Complex tensor stored as separate real and imaginary planes.
#[pyclass(name = "CTensor", module = "pycvnn", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyCTensor {
    inner: cvnn::CTensor,
}

#[pymethods]
impl PyCTensor {
    #[new]
    #[pyo3(signature = (re, im, shape=None))]
    fn new(re: Vec<f64>, im: Vec<f64>, shape: Option<Vec<usize>>) -> PyResult<Self> {
        let shape = shape.unwrap_or_else(|| vec![re.len()]);
        Ok(PyCTensor { inner: cvnn::CTensor::new(re, im, shape).map_err(err)? })
    }

    #[getter]
    fn shape(&self) -> Vec<usize> {
        self.inner.shape().dims().to_vec()
    }

    #[getter]
    fn re(&self) -> Vec<f64> {
        self.inner.re().to_vec()
    }

    #[getter]
    fn im(&self) -> Vec<f64> {
        self.inner.im().to_vec()
    }

    fn abs(&self) -> Vec<f64> {
        self.inner.abs().into_data()
    }

    /// Phase in `(-π, π]`, 0 at the origin.
    fn phase(&self) -> Vec<f64> {
        self.inner.re().iter().zip(self.inner.im()).map(|(&x, &y)| phase(x, y)).collect()
    }

    fn quantize_phase(&self, levels: u32) -> Self {
        PyCTensor { inner: cvnn::layers::phase_quantize(&self.inner, levels) }
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("CTensor(shape={:?})", self.inner.shape().dims())
    }
}

/// `x·Wᵀ + b` on the named backend; returns the output and the tape length.
#[pyfunction]
#[pyo3(signature = (x, weight, bias=None, backend="block"))]
fn linear(x: &PyCTensor, weight: &PyCTensor, bias: Option<&PyCTensor>, backend: &str) -> PyResult<(PyCTensor, usize)> {
    let backend: Backend = backend.parse().map_err(err)?;
    let mut store = ParamStore::new();
    let layer = ComplexLinear::from_weights(&mut store, "linear", weight.inner.clone(), bias.map(|b| b.inner.clone()), backend)
        .map_err(err)?;
    let mut tape = Tape::new();
    let xv = tape.constant(x.inner.clone());
    let y = layer.forward(&mut tape, &store, xv).map_err(err)?;
    let out = tape.complex(y).map_err(err)?.clone();
    Ok((PyCTensor { inner: out }, tape.node_count()))
}

/// Complex spectrogram `[frames, n_fft/2 + 1]` with a periodic Hann window.
#[pyfunction]
fn stft(wave: Vec<f64>, n_fft: usize, hop: usize, win_length: usize) -> PyResult<PyCTensor> {
    let cfg = StftConfig::new(n_fft, hop, win_length).map_err(err)?;
    Ok(PyCTensor { inner: cvnn::signal::stft(&cfg, &wave).map_err(err)? })
}

#[pyfunction]
#[pyo3(signature = (spec, n_fft, hop, win_length, length=None))]
fn istft(spec: &PyCTensor, n_fft: usize, hop: usize, win_length: usize, length: Option<usize>) -> PyResult<Vec<f64>> {
    let cfg = StftConfig::new(n_fft, hop, win_length).map_err(err)?;
    Ok(cvnn::signal::istft(&cfg, &spec.inner, length).map_err(err)?.into_data())
}

/// Jensen-Shannon divergence (nats) between Gaussian KDEs of two sample sets.
#[pyfunction]
fn jsd(a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    cvnn::losses::jsd_1d(&a, &b, &KdeConfig::default()).map_err(err)
}

/// Weighted generator objective with the default weights (45, 1, 0.1).
#[pyfunction]
fn total_generator_loss(mel_l1: f64, g_mpd: f64, fm_mpd: f64, g_cmrd: f64, fm_cmrd: f64) -> f64 {
    let t = GeneratorTerms { mel_l1, g_mpd, fm_mpd, g_cmrd, fm_cmrd };
    cvnn::losses::total_generator_loss(&t, &LossWeights::default())
}

/// Backend-equivalence and gradient-check report as a JSON string.
#[pyfunction]
#[pyo3(signature = (seed=0, trials=100))]
fn verify(py: Python<'_>, seed: u64, trials: usize) -> PyResult<String> {
    let report = py.detach(|| cvnn::verify::run(seed, trials, cvnn::verify::Fault::None)).map_err(err)?;
    serde_json::to_string(&report).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Node counts and timings of the benchmark stacks as a JSON string.
#[pyfunction(name = "bench")]
#[pyo3(signature = (repeats=10))]
fn run_bench(py: Python<'_>, repeats: usize) -> PyResult<String> {
    let cfg = cvnn::bench::BenchConfig { repeats, ..Default::default() };
    let report = py.detach(|| cvnn::bench::run(&cfg)).map_err(err)?;
    serde_json::to_string(&report).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pymodule]
fn pycvnn(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCTensor>()?;
    m.add_function(wrap_pyfunction!(linear, m)?)?;
    m.add_function(wrap_pyfunction!(stft, m)?)?;
    m.add_function(wrap_pyfunction!(istft, m)?)?;
    m.add_function(wrap_pyfunction!(jsd, m)?)?;
    m.add_function(wrap_pyfunction!(total_generator_loss, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(run_bench, m)?)?;
    Ok(())
}
