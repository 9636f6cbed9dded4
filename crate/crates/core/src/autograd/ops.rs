//! Primitive differentiable operations. Fused layer kernels live next to
//! their layers; this file holds the building blocks everything else is
//! composed from.

use crate::autograd::tape::{Backward, Grad, Tape, Value, Var};
use crate::ctensor::{Broadcast, CTensor, RTensor, Shape};
use crate::error::{Error, Result};
use crate::kernels::{self, ConvDims, ConvGeometry};
use crate::layers::activation::Activation;

struct ReOp;

impl Backward for ReOp {
    fn backward(&self, _: &[&Value], _: &Value, g: &Grad, _: &[bool]) -> Result<Vec<Option<Grad>>> {
        Ok(vec![Some(Grad::complex(g.re.clone(), vec![0.0; g.re.len()]))])
    }
}

struct ImOp;

impl Backward for ImOp {
    fn backward(&self, _: &[&Value], _: &Value, g: &Grad, _: &[bool]) -> Result<Vec<Option<Grad>>> {
        Ok(vec![Some(Grad::complex(vec![0.0; g.re.len()], g.re.clone()))])
    }
}

struct MergeOp;

impl Backward for MergeOp {
    fn backward(&self, _: &[&Value], _: &Value, g: &Grad, _: &[bool]) -> Result<Vec<Option<Grad>>> {
        Ok(vec![
            Some(Grad::real(g.re.clone())),
            Some(Grad::real(g.im_or_zero().into_owned())),
        ])
    }
}

/// Sums broadcast gradient entries back onto an operand of `len` elements.
fn reduce(idx: &[usize], g: &[f64], len: usize, sign: f64) -> Vec<f64> {
    let mut out = vec![0.0; len];
    for (&i, &v) in idx.iter().zip(g) {
        out[i] += sign * v;
    }
    out
}

struct AddOp {
    bc: Broadcast,
    sign: f64,
}

impl Backward for AddOp {
    fn backward(&self, inputs: &[&Value], _: &Value, g: &Grad, needs: &[bool]) -> Result<Vec<Option<Grad>>> {
        let mut out = Vec::with_capacity(2);
        for (k, (idx, sign)) in [(&self.bc.lhs, 1.0), (&self.bc.rhs, self.sign)].into_iter().enumerate() {
            if !needs[k] {
                out.push(None);
                continue;
            }
            let len = inputs[k].numel();
            let re = reduce(idx, &g.re, len, sign);
            let im = g.im.as_ref().map(|gi| reduce(idx, gi, len, sign));
            out.push(Some(Grad { re, im }));
        }
        Ok(out)
    }
}

struct MulOp {
    bc: Broadcast,
}

impl Backward for MulOp {
    fn backward(&self, inputs: &[&Value], _: &Value, g: &Grad, needs: &[bool]) -> Result<Vec<Option<Grad>>> {
        let (a, b) = (inputs[0], inputs[1]);
        let (la, lb) = (a.numel(), b.numel());
        match (a.im(), b.im()) {
            (None, None) => {
                let (ar, br) = (a.re(), b.re());
                let mut ga = vec![0.0; la];
                let mut gb = vec![0.0; lb];
                for ((&i, &j), &gv) in self.bc.lhs.iter().zip(&self.bc.rhs).zip(&g.re) {
                    ga[i] += gv * br[j];
                    gb[j] += gv * ar[i];
                }
                Ok(vec![Some(Grad::real(ga)), Some(Grad::real(gb))])
            }
            (Some(ai), Some(bi)) => {
                // g_a = g · conj(b), g_b = g · conj(a)
                let (ar, br) = (a.re(), b.re());
                let gi = g.im_or_zero();
                let (mut gar, mut gai) = (vec![0.0; la], vec![0.0; la]);
                let (mut gbr, mut gbi) = (vec![0.0; lb], vec![0.0; lb]);
                for (k, (&i, &j)) in self.bc.lhs.iter().zip(&self.bc.rhs).enumerate() {
                    let (u, v) = (g.re[k], gi[k]);
                    gar[i] += u * br[j] + v * bi[j];
                    gai[i] += v * br[j] - u * bi[j];
                    gbr[j] += u * ar[i] + v * ai[i];
                    gbi[j] += v * ar[i] - u * ai[i];
                }
                Ok(vec![
                    needs[0].then(|| Grad::complex(gar, gai)),
                    needs[1].then(|| Grad::complex(gbr, gbi)),
                ])
            }
            _ => Err(Error::ValueKind {
                op: "mul",
                expected: "operands of the same kind",
            }),
        }
    }
}

struct ScaleOp(f64);

impl Backward for ScaleOp {
    fn backward(&self, _: &[&Value], _: &Value, g: &Grad, _: &[bool]) -> Result<Vec<Option<Grad>>> {
        let s = self.0;
        Ok(vec![Some(Grad {
            re: g.re.iter().map(|v| v * s).collect(),
            im: g.im.as_ref().map(|im| im.iter().map(|v| v * s).collect()),
        })])
    }
}

struct PassOp;

impl Backward for PassOp {
    fn backward(&self, _: &[&Value], _: &Value, g: &Grad, _: &[bool]) -> Result<Vec<Option<Grad>>> {
        Ok(vec![Some(g.clone())])
    }
}

struct TransposeOp {
    rows: usize,
    cols: usize,
}

fn transpose_last2(v: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mat = rows * cols;
    let mut out = vec![0.0; v.len()];
    for (src, dst) in v.chunks_exact(mat).zip(out.chunks_exact_mut(mat)) {
        for i in 0..rows {
            for j in 0..cols {
                dst[j * rows + i] = src[i * cols + j];
            }
        }
    }
    out
}

impl Backward for TransposeOp {
    fn backward(&self, _: &[&Value], _: &Value, g: &Grad, _: &[bool]) -> Result<Vec<Option<Grad>>> {
        // output is [.., cols, rows]
        Ok(vec![Some(Grad {
            re: transpose_last2(&g.re, self.cols, self.rows),
            im: g.im.as_ref().map(|im| transpose_last2(im, self.cols, self.rows)),
        })])
    }
}

struct NarrowOp {
    outer: usize,
    n: usize,
    inner: usize,
    start: usize,
    len: usize,
}

impl NarrowOp {
    fn gather(&self, x: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.outer * self.len * self.inner);
        for o in 0..self.outer {
            let base = (o * self.n + self.start) * self.inner;
            out.extend_from_slice(&x[base..base + self.len * self.inner]);
        }
        out
    }

    fn scatter(&self, g: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.outer * self.n * self.inner];
        let span = self.len * self.inner;
        for o in 0..self.outer {
            let base = (o * self.n + self.start) * self.inner;
            out[base..base + span].copy_from_slice(&g[o * span..(o + 1) * span]);
        }
        out
    }
}

impl Backward for NarrowOp {
    fn backward(&self, _: &[&Value], _: &Value, g: &Grad, _: &[bool]) -> Result<Vec<Option<Grad>>> {
        Ok(vec![Some(Grad {
            re: self.scatter(&g.re),
            im: g.im.as_ref().map(|p| self.scatter(p)),
        })])
    }
}

struct LinearOp {
    batch: usize,
    inp: usize,
    out: usize,
}

impl Backward for LinearOp {
    fn backward(&self, inputs: &[&Value], _: &Value, g: &Grad, needs: &[bool]) -> Result<Vec<Option<Grad>>> {
        let (x, w) = (inputs[0].re(), inputs[1].re());
        let gx = needs[0].then(|| {
            Grad::real(kernels::linear_grad_input(&g.re, w, self.batch, self.inp, self.out))
        });
        let gw = needs[1].then(|| {
            Grad::real(kernels::linear_grad_weight(&g.re, x, self.batch, self.inp, self.out))
        });
        Ok(vec![gx, gw])
    }
}

struct ConvOp {
    dims: ConvDims,
}

impl Backward for ConvOp {
    fn backward(&self, inputs: &[&Value], _: &Value, g: &Grad, needs: &[bool]) -> Result<Vec<Option<Grad>>> {
        let (x, k) = (inputs[0].re(), inputs[1].re());
        let gx = needs[0].then(|| Grad::real(kernels::conv2d_grad_input(&self.dims, &g.re, k)));
        let gk = needs[1].then(|| Grad::real(kernels::conv2d_grad_kernel(&self.dims, &g.re, x)));
        Ok(vec![gx, gk])
    }
}

struct RealActOp(Activation);

impl Backward for RealActOp {
    fn backward(&self, inputs: &[&Value], _: &Value, g: &Grad, _: &[bool]) -> Result<Vec<Option<Grad>>> {
        let x = inputs[0].re();
        Ok(vec![Some(Grad::real(
            x.iter().zip(&g.re).map(|(&v, &gv)| gv * self.0.derivative(v)).collect(),
        ))])
    }
}

struct AbsOp;

impl Backward for AbsOp {
    fn backward(&self, inputs: &[&Value], _: &Value, g: &Grad, _: &[bool]) -> Result<Vec<Option<Grad>>> {
        let x = inputs[0].re();
        Ok(vec![Some(Grad::real(
            x.iter()
                .zip(&g.re)
                .map(|(&v, &gv)| if v > 0.0 { gv } else if v < 0.0 { -gv } else { 0.0 })
                .collect(),
        ))])
    }
}

/// `|z|` with zero gradient at the origin.
struct CAbsOp;

impl Backward for CAbsOp {
    fn backward(&self, inputs: &[&Value], out: &Value, g: &Grad, _: &[bool]) -> Result<Vec<Option<Grad>>> {
        let z = inputs[0].as_complex("cabs")?;
        let r = out.re();
        let n = r.len();
        let (mut gr, mut gi) = (vec![0.0; n], vec![0.0; n]);
        for i in 0..n {
            if r[i] > 0.0 {
                let s = g.re[i] / r[i];
                gr[i] = s * z.re()[i];
                gi[i] = s * z.im()[i];
            }
        }
        Ok(vec![Some(Grad::complex(gr, gi))])
    }
}

struct LogOp(f64);

impl Backward for LogOp {
    fn backward(&self, inputs: &[&Value], _: &Value, g: &Grad, _: &[bool]) -> Result<Vec<Option<Grad>>> {
        let x = inputs[0].re();
        Ok(vec![Some(Grad::real(
            x.iter().zip(&g.re).map(|(&v, &gv)| gv / (v + self.0)).collect(),
        ))])
    }
}

struct SumOp {
    scale: f64,
}

impl Backward for SumOp {
    fn backward(&self, inputs: &[&Value], _: &Value, g: &Grad, _: &[bool]) -> Result<Vec<Option<Grad>>> {
        let n = inputs[0].numel();
        let gr = g.re[0] * self.scale;
        let im = inputs[0]
            .is_complex()
            .then(|| vec![g.im.as_ref().map_or(0.0, |v| v[0]) * self.scale; n]);
        Ok(vec![Some(Grad { re: vec![gr; n], im })])
    }
}

struct BceOp {
    target: f64,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Backward for BceOp {
    fn backward(&self, inputs: &[&Value], _: &Value, g: &Grad, _: &[bool]) -> Result<Vec<Option<Grad>>> {
        let x = inputs[0].re();
        let s = g.re[0] / x.len() as f64;
        Ok(vec![Some(Grad::real(
            x.iter().map(|&v| s * (sigmoid(v) - self.target)).collect(),
        ))])
    }
}

fn same_kind(op: &'static str, a: &Value, b: &Value) -> Result<()> {
    if a.is_complex() != b.is_complex() {
        return Err(Error::ValueKind {
            op,
            expected: "operands of the same kind",
        });
    }
    Ok(())
}

/// `[B, C, L]`/`[O, C/g, K]` or `[B, C, H, W]`/`[O, C/g, kh, kw]` geometry.
pub(crate) fn conv_dims(x: &Shape, k: &Shape, geom: ConvGeometry) -> Result<ConvDims> {
    let bad = || Error::InvalidShape {
        op: "conv",
        reason: format!("input {x} / kernel {k} must both be 3-D or both 4-D"),
    };
    let (xd, kd) = (x.dims(), k.dims());
    let (b, c, h, w, o, kc, kh, kw) = match (xd.len(), kd.len()) {
        (3, 3) => (xd[0], xd[1], 1, xd[2], kd[0], kd[1], 1, kd[2]),
        (4, 4) => (xd[0], xd[1], xd[2], xd[3], kd[0], kd[1], kd[2], kd[3]),
        _ => return Err(bad()),
    };
    if geom.groups == 0 || kc * geom.groups != c {
        return Err(Error::InvalidShape {
            op: "conv",
            reason: format!("kernel {k} expects {} input channels, got {c}", kc * geom.groups.max(1)),
        });
    }
    ConvDims::new(b, c, h, w, o, kh, kw, geom)
}

/// Output shape of a convolution, in the rank of the input.
pub(crate) fn conv_out_shape(x: &Shape, d: &ConvDims) -> Shape {
    if x.ndim() == 3 {
        Shape::new([d.batch, d.cout, d.ow])
    } else {
        Shape::new([d.batch, d.cout, d.oh, d.ow])
    }
}

impl Tape {
    pub fn re(&mut self, z: Var) -> Result<Var> {
        let t = self.value(z).as_complex("re")?.real_part();
        Ok(self.record("re", &[z], Value::Real(t), Box::new(ReOp)))
    }

    pub fn im(&mut self, z: Var) -> Result<Var> {
        let t = self.value(z).as_complex("im")?.imag_part();
        Ok(self.record("im", &[z], Value::Real(t), Box::new(ImOp)))
    }

    /// `x + i·y` from two real nodes of equal shape.
    pub fn merge(&mut self, x: Var, y: Var) -> Result<Var> {
        let (a, b) = (self.value(x).as_real("merge")?, self.value(y).as_real("merge")?);
        if a.shape() != b.shape() {
            return Err(Error::ShapeMismatch {
                op: "merge",
                lhs: a.shape().clone(),
                rhs: b.shape().clone(),
            });
        }
        let v = CTensor::from_raw(a.data().to_vec(), b.data().to_vec(), a.shape().clone());
        Ok(self.record("merge", &[x, y], Value::Complex(v), Box::new(MergeOp)))
    }

    fn add_sub(&mut self, a: Var, b: Var, sign: f64, kind: &'static str) -> Result<Var> {
        let (va, vb) = (self.value(a), self.value(b));
        same_kind(kind, va, vb)?;
        let bc = Broadcast::new(kind, va.shape(), vb.shape())?;
        let comb = |pa: &[f64], pb: &[f64]| -> Vec<f64> {
            bc.lhs.iter().zip(&bc.rhs).map(|(&i, &j)| pa[i] + sign * pb[j]).collect()
        };
        let re = comb(va.re(), vb.re());
        let im = va.im().zip(vb.im()).map(|(x, y)| comb(x, y));
        let value = Value::from_planes(re, im, bc.shape.clone());
        Ok(self.record(kind, &[a, b], value, Box::new(AddOp { bc, sign })))
    }

    /// Broadcasting sum of two real or two complex nodes.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.add_sub(a, b, 1.0, "add")
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.add_sub(a, b, -1.0, "sub")
    }

    /// Broadcasting elementwise product (complex product for complex nodes).
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (va, vb) = (self.value(a), self.value(b));
        same_kind("mul", va, vb)?;
        let bc = Broadcast::new("mul", va.shape(), vb.shape())?;
        let value = match (va, vb) {
            (Value::Complex(x), Value::Complex(y)) => Value::Complex(crate::ctensor::cmul(x, y)?),
            _ => {
                let (x, y) = (va.re(), vb.re());
                let d = bc.lhs.iter().zip(&bc.rhs).map(|(&i, &j)| x[i] * y[j]).collect();
                Value::Real(RTensor::from_raw(d, bc.shape.clone()))
            }
        };
        Ok(self.record("mul", &[a, b], value, Box::new(MulOp { bc })))
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Result<Var> {
        let v = self.value(a);
        let re = v.re().iter().map(|x| x * s).collect();
        let im = v.im().map(|p| p.iter().map(|x| x * s).collect());
        let value = Value::from_planes(re, im, v.shape().clone());
        Ok(self.record("scale", &[a], value, Box::new(ScaleOp(s))))
    }

    /// Adds a real constant to every entry of a real node.
    pub fn add_scalar(&mut self, a: Var, c: f64) -> Result<Var> {
        let t = self.value(a).as_real("add_scalar")?.map(|x| x + c);
        Ok(self.record("add_scalar", &[a], Value::Real(t), Box::new(PassOp)))
    }

    pub fn reshape(&mut self, a: Var, shape: impl Into<Shape>) -> Result<Var> {
        let value = match self.value(a) {
            Value::Real(t) => Value::Real(t.reshape(shape)?),
            Value::Complex(t) => Value::Complex(t.reshape(shape)?),
        };
        Ok(self.record("reshape", &[a], value, Box::new(PassOp)))
    }

    /// Swaps the last two axes.
    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        let v = self.value(a);
        let dims = v.shape().dims();
        if dims.len() < 2 {
            return Err(Error::InvalidShape {
                op: "transpose",
                reason: format!("need at least 2 axes, got {}", v.shape()),
            });
        }
        let (rows, cols) = (dims[dims.len() - 2], dims[dims.len() - 1]);
        let mut out = dims.to_vec();
        let nd = out.len();
        out.swap(nd - 2, nd - 1);
        let re = transpose_last2(v.re(), rows, cols);
        let im = v.im().map(|p| transpose_last2(p, rows, cols));
        let value = Value::from_planes(re, im, Shape::new(out));
        Ok(self.record("transpose", &[a], value, Box::new(TransposeOp { rows, cols })))
    }

    /// Entries `start..start + len` along `axis`.
    pub fn narrow(&mut self, a: Var, axis: usize, start: usize, len: usize) -> Result<Var> {
        let v = self.value(a);
        let dims = v.shape().dims();
        if axis >= dims.len() || start + len > dims[axis] {
            return Err(Error::InvalidShape {
                op: "narrow",
                reason: format!("range {start}..{} on axis {axis} of {}", start + len, v.shape()),
            });
        }
        let op = NarrowOp {
            outer: dims[..axis].iter().product(),
            n: dims[axis],
            inner: dims[axis + 1..].iter().product(),
            start,
            len,
        };
        let mut shape = dims.to_vec();
        shape[axis] = len;
        let value = Value::from_planes(op.gather(v.re()), v.im().map(|p| op.gather(p)), Shape::new(shape));
        Ok(self.record("narrow", &[a], value, Box::new(op)))
    }

    /// Real dense layer `x · wᵀ`, `x: [.., in]`, `w: [out, in]`.
    pub fn linear(&mut self, x: Var, w: Var) -> Result<Var> {
        let (xv, wv) = (self.value(x).as_real("linear")?, self.value(w).as_real("linear")?);
        let (xs, ws) = (xv.shape(), wv.shape());
        if ws.ndim() != 2 || xs.ndim() == 0 || xs.dims()[xs.ndim() - 1] != ws.dim(1) {
            return Err(Error::ShapeMismatch {
                op: "linear",
                lhs: xs.clone(),
                rhs: ws.clone(),
            });
        }
        let (out, inp) = (ws.dim(0), ws.dim(1));
        let batch = xv.len() / inp.max(1);
        let y = kernels::linear(xv.data(), wv.data(), batch, inp, out);
        let mut shape = xs.dims().to_vec();
        *shape.last_mut().unwrap() = out;
        let value = Value::Real(RTensor::from_raw(y, Shape::new(shape)));
        Ok(self.record("linear", &[x, w], value, Box::new(LinearOp { batch, inp, out })))
    }

    /// Real cross-correlation. `x: [B, C, L]` with `k: [O, C/g, K]`, or
    /// `x: [B, C, H, W]` with `k: [O, C/g, kh, kw]`.
    pub fn conv(&mut self, x: Var, k: Var, geom: ConvGeometry) -> Result<Var> {
        let (xv, kv) = (self.value(x).as_real("conv")?, self.value(k).as_real("conv")?);
        let dims = conv_dims(xv.shape(), kv.shape(), geom)?;
        let y = kernels::conv2d(&dims, xv.data(), kv.data());
        let value = Value::Real(RTensor::from_raw(y, conv_out_shape(xv.shape(), &dims)));
        Ok(self.record("conv", &[x, k], value, Box::new(ConvOp { dims })))
    }

    /// Elementwise real nonlinearity.
    pub fn activation(&mut self, x: Var, act: Activation) -> Result<Var> {
        let t = self.value(x).as_real("activation")?.map(|v| act.apply(v));
        Ok(self.record("activation", &[x], Value::Real(t), Box::new(RealActOp(act))))
    }

    pub fn abs(&mut self, x: Var) -> Result<Var> {
        let t = self.value(x).as_real("abs")?.map(f64::abs);
        Ok(self.record("abs", &[x], Value::Real(t), Box::new(AbsOp)))
    }

    /// Complex magnitude `|z|`.
    pub fn cabs(&mut self, z: Var) -> Result<Var> {
        let t = self.value(z).as_complex("cabs")?.abs();
        Ok(self.record("cabs", &[z], Value::Real(t), Box::new(CAbsOp)))
    }

    /// `ln(x + eps)`; fails when `x + eps ≤ 0`.
    pub fn log_eps(&mut self, x: Var, eps: f64) -> Result<Var> {
        let xv = self.value(x).as_real("log_eps")?;
        if xv.data().iter().any(|&v| v + eps <= 0.0) {
            return Err(Error::NonFinite("log_eps"));
        }
        let t = xv.map(|v| (v + eps).ln());
        Ok(self.record("log", &[x], Value::Real(t), Box::new(LogOp(eps))))
    }

    /// Sum of all entries (complex sum for complex nodes).
    pub fn sum(&mut self, x: Var) -> Result<Var> {
        self.reduce_all(x, 1.0, "sum")
    }

    pub fn mean(&mut self, x: Var) -> Result<Var> {
        let n = self.value(x).numel().max(1) as f64;
        self.reduce_all(x, 1.0 / n, "mean")
    }

    fn reduce_all(&mut self, x: Var, scale: f64, kind: &'static str) -> Result<Var> {
        let v = self.value(x);
        let re = vec![v.re().iter().sum::<f64>() * scale];
        let im = v.im().map(|p| vec![p.iter().sum::<f64>() * scale]);
        let value = Value::from_planes(re, im, Shape::scalar());
        Ok(self.record(kind, &[x], value, Box::new(SumOp { scale })))
    }

    /// Mean binary cross-entropy of real logits against a constant label.
    pub fn bce_with_logits(&mut self, logits: Var, target: f64) -> Result<Var> {
        let x = self.value(logits).as_real("bce_with_logits")?;
        let n = x.len().max(1) as f64;
        let l: f64 = x
            .data()
            .iter()
            .map(|&v| v.max(0.0) - v * target + (-v.abs()).exp().ln_1p())
            .sum::<f64>()
            / n;
        let value = Value::Real(RTensor::scalar(l));
        Ok(self.record("bce", &[logits], value, Box::new(BceOp { target })))
    }
}
