use crate::autograd::params::{ParamId, ParamStore};
use crate::autograd::tape::{Backward, Grad, Tape, Value, Var};
use crate::ctensor::{Broadcast, CTensor, Shape};
use crate::error::{Error, Result};
use crate::layers::linear::{gauss_product, naive_product};
use crate::layers::{Backend, Layer};

pub const DEFAULT_EPS: f64 = 1e-5;

/// `(outer, n, inner)` split of a shape around `axis`.
fn split_axis(shape: &Shape, axis: usize) -> Result<(usize, usize, usize)> {
    let d = shape.dims();
    if axis >= d.len() {
        return Err(Error::InvalidShape {
            op: "layernorm",
            reason: format!("axis {axis} out of range for {shape}"),
        });
    }
    let outer = d[..axis].iter().product();
    let inner = d[axis + 1..].iter().product();
    if d[axis] < 2 {
        return Err(Error::InvalidShape {
            op: "layernorm",
            reason: format!("normalized axis has length {}, need at least 2", d[axis]),
        });
    }
    Ok((outer, d[axis], inner))
}

/// Statistics of one normalized group.
struct Moments {
    mx: f64,
    my: f64,
    /// `(Σ + εI)^{-1/2}` as `[m11, m12, m22]`.
    m: [f64; 3],
    /// `(Σ + εI)^{1/2}` as `[s11, s12, s22]`.
    s: [f64; 3],
}

fn moments(x: &[f64], y: &[f64], idx: impl Iterator<Item = usize> + Clone, n: usize, eps: f64) -> Result<Moments> {
    let nf = n as f64;
    let (mut mx, mut my) = (0.0, 0.0);
    for i in idx.clone() {
        mx += x[i];
        my += y[i];
    }
    mx /= nf;
    my /= nf;
    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
    for i in idx {
        let (u, v) = (x[i] - mx, y[i] - my);
        a += u * u;
        b += u * v;
        c += v * v;
    }
    let (a, b, c) = (a / nf + eps, b / nf, c / nf + eps);
    let s = (a * c - b * b).max(0.0).sqrt();
    let t = (a + c + 2.0 * s).sqrt();
    let k = 1.0 / (s * t);
    let out = Moments {
        mx,
        my,
        m: [k * (c + s), -k * b, k * (a + s)],
        s: [(a + s) / t, b / t, (c + s) / t],
    };
    if !out.m.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("layernorm covariance"));
    }
    Ok(out)
}

/// Symmetric `X` with `S X + X S = H` for symmetric positive definite `S`.
fn sylvester_sym(s: [f64; 3], h: [f64; 3]) -> [f64; 3] {
    let [p, q, r] = s;
    let [h11, h12, h22] = h;
    let coef = (p + r) - q * q / p - q * q / r;
    let w = (h12 - q * h11 / (2.0 * p) - q * h22 / (2.0 * r)) / coef;
    [(h11 - 2.0 * q * w) / (2.0 * p), w, (h22 - 2.0 * q * w) / (2.0 * r)]
}

struct WhitenOp {
    axis: usize,
    eps: f64,
}

impl Backward for WhitenOp {
    fn backward(&self, inputs: &[&Value], _: &Value, g: &Grad, _: &[bool]) -> Result<Vec<Option<Grad>>> {
        let z = inputs[0].as_complex("whiten")?;
        let (outer, n, inner) = split_axis(z.shape(), self.axis)?;
        let (x, y) = (z.re(), z.im());
        let gi = g.im_or_zero();
        let (mut gx, mut gy) = (vec![0.0; z.len()], vec![0.0; z.len()]);
        let mut gd = vec![(0.0, 0.0); n];
        for o in 0..outer {
            for i in 0..inner {
                let idx = (0..n).map(move |k| (o * n + k) * inner + i);
                let mo = moments(x, y, idx.clone(), n, self.eps)?;
                let [m11, m12, m22] = mo.m;
                // GM = Σ g dᵀ
                let mut gm = [[0.0; 2]; 2];
                for j in idx.clone() {
                    let (u, v) = (x[j] - mo.mx, y[j] - mo.my);
                    gm[0][0] += g.re[j] * u;
                    gm[0][1] += g.re[j] * v;
                    gm[1][0] += gi[j] * u;
                    gm[1][1] += gi[j] * v;
                }
                // H = −M GM M, symmetrized
                let mm = [[m11, m12], [m12, m22]];
                let mut h = [[0.0; 2]; 2];
                for (r, hr) in h.iter_mut().enumerate() {
                    for (c, hv) in hr.iter_mut().enumerate() {
                        let mut acc = 0.0;
                        for p in 0..2 {
                            for q in 0..2 {
                                acc += mm[r][p] * gm[p][q] * mm[q][c];
                            }
                        }
                        *hv = -acc;
                    }
                }
                let hs = [h[0][0], 0.5 * (h[0][1] + h[1][0]), h[1][1]];
                let [x11, x12, x22] = sylvester_sym(mo.s, hs);
                let scale = 2.0 / n as f64;
                let (mut sx, mut sy) = (0.0, 0.0);
                for (k, j) in idx.clone().enumerate() {
                    let (u, v) = (x[j] - mo.mx, y[j] - mo.my);
                    let (a, b) = (g.re[j], gi[j]);
                    let dx = m11 * a + m12 * b + scale * (x11 * u + x12 * v);
                    let dy = m12 * a + m22 * b + scale * (x12 * u + x22 * v);
                    gd[k] = (dx, dy);
                    sx += dx;
                    sy += dy;
                }
                let (sx, sy) = (sx / n as f64, sy / n as f64);
                for (k, j) in idx.enumerate() {
                    gx[j] = gd[k].0 - sx;
                    gy[j] = gd[k].1 - sy;
                }
            }
        }
        Ok(vec![Some(Grad::complex(gx, gy))])
    }
}

/// `Σ^{-1/2}(z − μ)` over `axis`, with `Σ` the 2×2 covariance of the real
/// and imaginary parts plus `εI`.
pub fn whiten(z: &CTensor, axis: usize, eps: f64) -> Result<CTensor> {
    let (outer, n, inner) = split_axis(z.shape(), axis)?;
    let (x, y) = (z.re(), z.im());
    let (mut re, mut im) = (vec![0.0; z.len()], vec![0.0; z.len()]);
    for o in 0..outer {
        for i in 0..inner {
            let idx = (0..n).map(move |k| (o * n + k) * inner + i);
            let mo = moments(x, y, idx.clone(), n, eps)?;
            let [m11, m12, m22] = mo.m;
            for j in idx {
                let (u, v) = (x[j] - mo.mx, y[j] - mo.my);
                re[j] = m11 * u + m12 * v;
                im[j] = m12 * u + m22 * v;
            }
        }
    }
    Ok(CTensor::from_raw(re, im, z.shape().clone()))
}

struct CAffineOp {
    bc: Broadcast,
}

impl Backward for CAffineOp {
    fn backward(&self, inputs: &[&Value], _: &Value, g: &Grad, needs: &[bool]) -> Result<Vec<Option<Grad>>> {
        let z = inputs[0].as_complex("caffine")?;
        let gam = inputs[1].as_complex("caffine")?;
        let gi = g.im_or_zero();
        let (nz, ng) = (z.len(), gam.len());
        let (mut zr, mut zi) = (vec![0.0; nz], vec![0.0; nz]);
        let (mut cr, mut ci) = (vec![0.0; ng], vec![0.0; ng]);
        let (mut br, mut bi) = (vec![0.0; ng], vec![0.0; ng]);
        for (k, (&i, &j)) in self.bc.lhs.iter().zip(&self.bc.rhs).enumerate() {
            let (u, v) = (g.re[k], gi[k]);
            let (a, b) = gam.get(j);
            let (x, y) = z.get(i);
            zr[i] += u * a + v * b;
            zi[i] += v * a - u * b;
            cr[j] += u * x + v * y;
            ci[j] += v * x - u * y;
            br[j] += u;
            bi[j] += v;
        }
        Ok(vec![
            needs[0].then(|| Grad::complex(zr, zi)),
            needs[1].then(|| Grad::complex(cr, ci)),
            needs[2].then(|| Grad::complex(br, bi)),
        ])
    }
}

impl Tape {
    /// Complex whitening over `axis` as a single node.
    pub fn whiten(&mut self, z: Var, axis: usize, eps: f64) -> Result<Var> {
        let out = whiten(self.value(z).as_complex("whiten")?, axis, eps)?;
        Ok(self.record("whiten", &[z], Value::Complex(out), Box::new(WhitenOp { axis, eps })))
    }

    /// Fused `γ·z + β`; `γ` and `β` share a shape broadcastable to `z`.
    pub fn caffine(&mut self, z: Var, gamma: Var, beta: Var) -> Result<Var> {
        let zv = self.value(z).as_complex("caffine")?;
        let gv = self.value(gamma).as_complex("caffine")?;
        let bv = self.value(beta).as_complex("caffine")?;
        if gv.shape() != bv.shape() {
            return Err(Error::ShapeMismatch {
                op: "caffine",
                lhs: gv.shape().clone(),
                rhs: bv.shape().clone(),
            });
        }
        let bc = Broadcast::new("caffine", zv.shape(), gv.shape())?;
        if bc.shape != *zv.shape() {
            return Err(Error::ShapeMismatch {
                op: "caffine",
                lhs: zv.shape().clone(),
                rhs: gv.shape().clone(),
            });
        }
        let n = zv.len();
        let (mut re, mut im) = (vec![0.0; n], vec![0.0; n]);
        for (k, (&i, &j)) in bc.lhs.iter().zip(&bc.rhs).enumerate() {
            let (x, y) = zv.get(i);
            let (a, b) = gv.get(j);
            let (c, d) = bv.get(j);
            re[k] = a * x - b * y + c;
            im[k] = a * y + b * x + d;
        }
        let value = Value::Complex(CTensor::from_raw(re, im, zv.shape().clone()));
        Ok(self.record("caffine", &[z, gamma, beta], value, Box::new(CAffineOp { bc })))
    }
}

/// Complex layer normalization with covariance whitening and a learnable
/// complex affine map, normalizing over `axis`.
#[derive(Clone, Debug)]
pub struct ComplexLayerNorm {
    pub gamma: ParamId,
    pub beta: ParamId,
    pub features: usize,
    pub axis: usize,
    pub eps: f64,
    pub backend: Backend,
}

impl ComplexLayerNorm {
    /// `γ = 1`, `β = 0`.
    pub fn new(store: &mut ParamStore, name: &str, features: usize, axis: usize, eps: f64, backend: Backend) -> Result<Self> {
        let gamma = CTensor::from_real(&crate::ctensor::RTensor::full([features], 1.0));
        Self::from_weights(store, name, gamma, CTensor::zeros([features]), axis, eps, backend)
    }

    pub fn from_weights(
        store: &mut ParamStore,
        name: &str,
        gamma: CTensor,
        beta: CTensor,
        axis: usize,
        eps: f64,
        backend: Backend,
    ) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::Config(format!("layernorm eps must be positive, got {eps}")));
        }
        if gamma.shape().ndim() != 1 || gamma.shape() != beta.shape() {
            return Err(Error::ShapeMismatch {
                op: "ComplexLayerNorm",
                lhs: gamma.shape().clone(),
                rhs: beta.shape().clone(),
            });
        }
        let features = gamma.len();
        Ok(ComplexLayerNorm {
            gamma: store.add_complex(format!("{name}.gamma"), gamma),
            beta: store.add_complex(format!("{name}.beta"), beta),
            features,
            axis,
            eps,
            backend,
        })
    }

    pub fn with_backend(&self, backend: Backend) -> Self {
        ComplexLayerNorm { backend, ..self.clone() }
    }
}

impl Layer for ComplexLayerNorm {
    fn forward(&self, tape: &mut Tape, store: &ParamStore, x: Var) -> Result<Var> {
        let shape = tape.value(x).shape().clone();
        if shape.ndim() <= self.axis || shape.dim(self.axis) != self.features {
            return Err(Error::InvalidShape {
                op: "ComplexLayerNorm",
                reason: format!("axis {} of {shape} must have {} features", self.axis, self.features),
            });
        }
        let zn = tape.whiten(x, self.axis, self.eps)?;
        let mut gamma = tape.param(store, self.gamma);
        let mut beta = tape.param(store, self.beta);
        let trailing = shape.ndim() - self.axis - 1;
        if trailing > 0 {
            let mut bshape = vec![self.features];
            bshape.extend(std::iter::repeat_n(1, trailing));
            gamma = tape.reshape(gamma, bshape.clone())?;
            beta = tape.reshape(beta, bshape)?;
        }
        match self.backend {
            Backend::Block => tape.caffine(zn, gamma, beta),
            Backend::Naive => {
                let y = naive_product(tape, zn, gamma, |t, a, b| t.mul(a, b))?;
                tape.add(y, beta)
            }
            Backend::Gauss => {
                let y = gauss_product(tape, zn, gamma, |t, a, b| t.mul(a, b))?;
                tape.add(y, beta)
            }
        }
    }

    fn params(&self) -> Vec<ParamId> {
        vec![self.gamma, self.beta]
    }
}
