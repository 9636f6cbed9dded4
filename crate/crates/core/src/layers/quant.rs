use std::f64::consts::{PI, TAU};

use crate::autograd::params::{ParamId, ParamStore};
use crate::autograd::tape::{Backward, Grad, Tape, Value, Var};
use crate::ctensor::{phase, CTensor};
use crate::error::{Error, Result};
use crate::layers::Layer;

/// Nearest lattice phase `(2π/N)·round(Nθ/2π)`, re-wrapped into `(−π, π]`.
/// Ties round away from zero.
pub fn quantize_phase(theta: f64, levels: u32) -> f64 {
    if levels == 0 {
        return theta;
    }
    let n = f64::from(levels);
    let mut q = TAU / n * (n * theta / TAU).round();
    if q > PI {
        q -= TAU;
    } else if q <= -PI {
        q += TAU;
    }
    q
}

/// Snaps every phase to `levels` uniform levels and keeps the magnitude.
/// `levels = 0` is the identity.
pub fn phase_quantize(z: &CTensor, levels: u32) -> CTensor {
    if levels == 0 {
        return z.clone();
    }
    let n = z.len();
    let (mut re, mut im) = (vec![0.0; n], vec![0.0; n]);
    for i in 0..n {
        let (x, y) = z.get(i);
        let r = x.hypot(y);
        let (s, c) = quantize_phase(phase(x, y), levels).sin_cos();
        re[i] = r * c;
        im[i] = r * s;
    }
    CTensor::from_raw(re, im, z.shape().clone())
}

struct SteOp;

impl Backward for SteOp {
    fn backward(&self, _: &[&Value], _: &Value, g: &Grad, _: &[bool]) -> Result<Vec<Option<Grad>>> {
        Ok(vec![Some(g.clone())])
    }
}

impl Tape {
    /// Node whose forward value is `forward_value` and whose backward pass
    /// hands the incoming gradient to `z` unchanged.
    pub fn ste_identity(&mut self, z: Var, forward_value: impl Into<Value>) -> Result<Var> {
        let fv = forward_value.into();
        let zv = self.value(z);
        if zv.shape() != fv.shape() || zv.is_complex() != fv.is_complex() {
            return Err(Error::ShapeMismatch {
                op: "ste_identity",
                lhs: zv.shape().clone(),
                rhs: fv.shape().clone(),
            });
        }
        Ok(self.record("ste", &[z], fv, Box::new(SteOp)))
    }

    pub fn phase_quantize(&mut self, z: Var, levels: u32) -> Result<Var> {
        let q = phase_quantize(self.value(z).as_complex("phase_quantize")?, levels);
        self.ste_identity(z, q)
    }
}

/// Phase quantization layer with straight-through gradients.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PhaseQuantizer {
    pub levels: u32,
}

impl PhaseQuantizer {
    pub fn new(levels: u32) -> Self {
        PhaseQuantizer { levels }
    }
}

impl Layer for PhaseQuantizer {
    fn forward(&self, tape: &mut Tape, _: &ParamStore, x: Var) -> Result<Var> {
        tape.phase_quantize(x, self.levels)
    }

    fn params(&self) -> Vec<ParamId> {
        Vec::new()
    }
}
