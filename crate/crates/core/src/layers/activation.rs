use serde::{Deserialize, Serialize};

use crate::autograd::tape::{Backward, Grad, Tape, Value, Var};
use crate::ctensor::{Broadcast, CTensor};
use crate::error::{Error, Result};

/// Real scalar nonlinearity, used directly on real nodes or on both planes
/// of a complex node (split activation).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Activation {
    Identity,
    Relu,
    LeakyRelu(f64),
    /// Exact form `x·Φ(x)`.
    Gelu,
    Tanh,
}

const INV_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Relu => x.max(0.0),
            Activation::LeakyRelu(a) => {
                if x > 0.0 {
                    x
                } else {
                    a * x
                }
            }
            Activation::Gelu => 0.5 * x * (1.0 + libm::erf(x * INV_SQRT_2)),
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative, taking the left branch at kinks.
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::LeakyRelu(a) => {
                if x > 0.0 {
                    1.0
                } else {
                    a
                }
            }
            Activation::Gelu => {
                0.5 * (1.0 + libm::erf(x * INV_SQRT_2)) + x * INV_SQRT_2PI * (-0.5 * x * x).exp()
            }
            Activation::Tanh => 1.0 - x.tanh().powi(2),
        }
    }
}

/// Magnitude map `ℝ≥0 → ℝ≥0` for phase-preserving activations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum MagFn {
    Identity,
    Relu,
    Tanh,
    /// `max(0, r + b)`.
    ModRelu(f64),
    /// `scale·r + shift`; rejected at runtime if it goes negative.
    Affine { scale: f64, shift: f64 },
}

impl MagFn {
    pub fn apply(self, r: f64) -> f64 {
        match self {
            MagFn::Identity => r,
            MagFn::Relu => r.max(0.0),
            MagFn::Tanh => r.tanh(),
            MagFn::ModRelu(b) => (r + b).max(0.0),
            MagFn::Affine { scale, shift } => scale * r + shift,
        }
    }

    pub fn derivative(self, r: f64) -> f64 {
        match self {
            MagFn::Identity => 1.0,
            MagFn::Relu => f64::from(r > 0.0),
            MagFn::Tanh => 1.0 - r.tanh().powi(2),
            MagFn::ModRelu(b) => f64::from(r + b > 0.0),
            MagFn::Affine { scale, .. } => scale,
        }
    }
}

/// `f(x) + i·f(y)`.
pub fn split_activation(z: &CTensor, f: Activation) -> CTensor {
    CTensor::from_raw(
        z.re().iter().map(|&v| f.apply(v)).collect(),
        z.im().iter().map(|&v| f.apply(v)).collect(),
        z.shape().clone(),
    )
}

/// `f(|z|)·e^{iθ}`; at `z = 0` the phase is taken as 0.
pub fn mag_activation(z: &CTensor, f: MagFn) -> Result<CTensor> {
    let n = z.len();
    let (mut re, mut im) = (vec![0.0; n], vec![0.0; n]);
    for i in 0..n {
        let (x, y) = z.get(i);
        let r = x.hypot(y);
        let m = f.apply(r);
        if m < 0.0 || !m.is_finite() {
            return Err(Error::InvalidMagnitude(m));
        }
        if r > 0.0 {
            re[i] = m * x / r;
            im[i] = m * y / r;
        } else {
            re[i] = m;
        }
    }
    Ok(CTensor::from_raw(re, im, z.shape().clone()))
}

struct SplitActOp(Activation);

impl Backward for SplitActOp {
    fn backward(&self, inputs: &[&Value], _: &Value, g: &Grad, _: &[bool]) -> Result<Vec<Option<Grad>>> {
        let f = self.0;
        let gi = g.im_or_zero();
        let z = inputs[0];
        let zi = z.im().unwrap_or_default();
        Ok(vec![Some(Grad::complex(
            z.re().iter().zip(&g.re).map(|(&x, &gv)| gv * f.derivative(x)).collect(),
            zi.iter().zip(gi.iter()).map(|(&y, &gv)| gv * f.derivative(y)).collect(),
        ))])
    }
}

struct MagActOp(MagFn);

impl Backward for MagActOp {
    fn backward(&self, inputs: &[&Value], _: &Value, g: &Grad, _: &[bool]) -> Result<Vec<Option<Grad>>> {
        let z = inputs[0].as_complex("mag_activation")?;
        let gi = g.im_or_zero();
        let n = z.len();
        let (mut gx, mut gy) = (vec![0.0; n], vec![0.0; n]);
        for i in 0..n {
            let (x, y) = z.get(i);
            let r = x.hypot(y);
            if r == 0.0 {
                continue;
            }
            // out = q(r)·z with q = f(r)/r
            let q = self.0.apply(r) / r;
            let dq = (self.0.derivative(r) * r - self.0.apply(r)) / (r * r);
            let proj = (x * g.re[i] + y * gi[i]) * dq / r;
            gx[i] = q * g.re[i] + x * proj;
            gy[i] = q * gi[i] + y * proj;
        }
        Ok(vec![Some(Grad::complex(gx, gy))])
    }
}

/// modReLU with a learnable threshold: `max(0, |z| − b)·e^{iθ}`.
struct ModReluOp {
    bc: Broadcast,
}

impl Backward for ModReluOp {
    fn backward(&self, inputs: &[&Value], _: &Value, g: &Grad, needs: &[bool]) -> Result<Vec<Option<Grad>>> {
        let z = inputs[0].as_complex("mod_relu")?;
        let b = inputs[1].re();
        let gi = g.im_or_zero();
        let n = z.len();
        let (mut gx, mut gy) = (vec![0.0; n], vec![0.0; n]);
        let mut gb = vec![0.0; b.len()];
        for (i, &j) in self.bc.rhs.iter().enumerate() {
            let (x, y) = z.get(i);
            let r = x.hypot(y);
            if r == 0.0 || r <= b[j] {
                continue;
            }
            let q = 1.0 - b[j] / r;
            let dot = g.re[i] * x + gi[i] * y;
            let k = b[j] * dot / (r * r * r);
            gx[i] = q * g.re[i] + k * x;
            gy[i] = q * gi[i] + k * y;
            gb[j] -= dot / r;
        }
        Ok(vec![
            needs[0].then(|| Grad::complex(gx, gy)),
            needs[1].then(|| Grad::real(gb)),
        ])
    }
}

impl Tape {
    /// modReLU with a real threshold node `b` that broadcasts against `z`.
    /// Entries with `|z| ≤ b` become exactly zero.
    pub fn mod_relu(&mut self, z: Var, b: Var) -> Result<Var> {
        let (zv, bv) = (self.value(z).as_complex("mod_relu")?, self.value(b).as_real("mod_relu")?);
        let bc = Broadcast::new("mod_relu", zv.shape(), bv.shape())?;
        if &bc.shape != zv.shape() {
            return Err(Error::ShapeMismatch { op: "mod_relu", lhs: zv.shape().clone(), rhs: bv.shape().clone() });
        }
        let n = zv.len();
        let (mut re, mut im) = (vec![0.0; n], vec![0.0; n]);
        for (i, &j) in bc.rhs.iter().enumerate() {
            let (x, y) = zv.get(i);
            let r = x.hypot(y);
            let t = bv.data()[j];
            if r > 0.0 && r > t {
                let q = 1.0 - t / r;
                re[i] = q * x;
                im[i] = q * y;
            }
        }
        let out = CTensor::from_raw(re, im, zv.shape().clone());
        Ok(self.record("mod_relu", &[z, b], Value::Complex(out), Box::new(ModReluOp { bc })))
    }

    pub fn split_activation(&mut self, z: Var, f: Activation) -> Result<Var> {
        let out = split_activation(self.value(z).as_complex("split_activation")?, f);
        Ok(self.record("split_act", &[z], Value::Complex(out), Box::new(SplitActOp(f))))
    }

    pub fn mag_activation(&mut self, z: Var, f: MagFn) -> Result<Var> {
        let out = mag_activation(self.value(z).as_complex("mag_activation")?, f)?;
        Ok(self.record("mag_act", &[z], Value::Complex(out), Box::new(MagActOp(f))))
    }
}
