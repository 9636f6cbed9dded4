use rand::Rng;

use crate::autograd::params::{ParamId, ParamStore};
use crate::autograd::tape::{Backward, Grad, Tape, Value, Var};
use crate::ctensor::{CTensor, RTensor, Shape};
use crate::error::{Error, Result};
use crate::kernels;
use crate::layers::init::{glorot_complex, glorot_real};
use crate::layers::{Backend, Layer};

/// `W z` from real products `f(x, w)` on split planes, four of them.
pub(crate) fn naive_product<F>(tape: &mut Tape, x: Var, w: Var, mut f: F) -> Result<Var>
where
    F: FnMut(&mut Tape, Var, Var) -> Result<Var>,
{
    let (wr, wi) = (tape.re(w)?, tape.im(w)?);
    let (xr, xi) = (tape.re(x)?, tape.im(x)?);
    let a = f(tape, xr, wr)?;
    let b = f(tape, xi, wi)?;
    let c = f(tape, xr, wi)?;
    let d = f(tape, xi, wr)?;
    let re = tape.sub(a, b)?;
    let im = tape.add(c, d)?;
    tape.merge(re, im)
}

/// Karatsuba form: `t1 = W_r x`, `t2 = W_i y`, `t3 = (W_r + W_i)(x + y)`,
/// then `Re = t1 − t2`, `Im = t3 − t1 − t2`.
pub(crate) fn gauss_product<F>(tape: &mut Tape, x: Var, w: Var, mut f: F) -> Result<Var>
where
    F: FnMut(&mut Tape, Var, Var) -> Result<Var>,
{
    let (wr, wi) = (tape.re(w)?, tape.im(w)?);
    let (xr, xi) = (tape.re(x)?, tape.im(x)?);
    let t1 = f(tape, xr, wr)?;
    let t2 = f(tape, xi, wi)?;
    let sx = tape.add(xr, xi)?;
    let sw = tape.add(wr, wi)?;
    let t3 = f(tape, sx, sw)?;
    let re = tape.sub(t1, t2)?;
    let u = tape.sub(t3, t1)?;
    let im = tape.sub(u, t2)?;
    tape.merge(re, im)
}

/// Real `2m × 2n` matrix `[[W_r, −W_i], [W_i, W_r]]`.
pub(crate) fn block_matrix(w: &CTensor, m: usize, n: usize) -> Vec<f64> {
    let mut a = vec![0.0; 4 * m * n];
    let (wr, wi) = (w.re(), w.im());
    for i in 0..m {
        let top = &mut a[i * 2 * n..(i + 1) * 2 * n];
        top[..n].copy_from_slice(&wr[i * n..(i + 1) * n]);
        for j in 0..n {
            top[n + j] = -wi[i * n + j];
        }
        let bot = &mut a[(m + i) * 2 * n..(m + i + 1) * 2 * n];
        bot[..n].copy_from_slice(&wi[i * n..(i + 1) * n]);
        bot[n..].copy_from_slice(&wr[i * n..(i + 1) * n]);
    }
    a
}

/// Rows `[x_b | y_b]` from two planes of `rows × width`.
fn stack_rows(re: &[f64], im: &[f64], rows: usize, width: usize) -> Vec<f64> {
    let mut s = vec![0.0; 2 * rows * width];
    for b in 0..rows {
        s[2 * b * width..(2 * b + 1) * width].copy_from_slice(&re[b * width..(b + 1) * width]);
        s[(2 * b + 1) * width..(2 * b + 2) * width].copy_from_slice(&im[b * width..(b + 1) * width]);
    }
    s
}

fn unstack_rows(s: &[f64], rows: usize, width: usize) -> (Vec<f64>, Vec<f64>) {
    let (mut re, mut im) = (Vec::with_capacity(rows * width), Vec::with_capacity(rows * width));
    for b in 0..rows {
        re.extend_from_slice(&s[2 * b * width..(2 * b + 1) * width]);
        im.extend_from_slice(&s[(2 * b + 1) * width..(2 * b + 2) * width]);
    }
    (re, im)
}

struct BlockLinearOp {
    batch: usize,
    inp: usize,
    out: usize,
}

impl Backward for BlockLinearOp {
    fn backward(&self, inputs: &[&Value], _: &Value, g: &Grad, needs: &[bool]) -> Result<Vec<Option<Grad>>> {
        let (b, n, m) = (self.batch, self.inp, self.out);
        let x = inputs[0].as_complex("block_linear")?;
        let w = inputs[1].as_complex("block_linear")?;
        let gi = g.im_or_zero();
        let gs = stack_rows(&g.re, &gi, b, m);
        let mut out = vec![None; inputs.len()];
        if needs[0] {
            let a = block_matrix(w, m, n);
            let gx = kernels::linear_grad_input(&gs, &a, b, 2 * n, 2 * m);
            let (re, im) = unstack_rows(&gx, b, n);
            out[0] = Some(Grad::complex(re, im));
        }
        if needs[1] {
            let xs = stack_rows(x.re(), x.im(), b, n);
            let da = kernels::linear_grad_weight(&gs, &xs, b, 2 * n, 2 * m);
            let at = |i: usize, j: usize| da[i * 2 * n + j];
            let (mut dr, mut di) = (vec![0.0; m * n], vec![0.0; m * n]);
            for i in 0..m {
                for j in 0..n {
                    dr[i * n + j] = at(i, j) + at(m + i, n + j);
                    di[i * n + j] = at(m + i, j) - at(i, n + j);
                }
            }
            out[1] = Some(Grad::complex(dr, di));
        }
        if inputs.len() == 3 && needs[2] {
            let (mut br, mut bi) = (vec![0.0; m], vec![0.0; m]);
            for r in 0..b {
                for j in 0..m {
                    br[j] += g.re[r * m + j];
                    bi[j] += gi[r * m + j];
                }
            }
            out[2] = Some(Grad::complex(br, bi));
        }
        Ok(out)
    }
}

impl Tape {
    /// Fused complex dense layer `z·Wᵀ (+ b)` through the block matrix.
    pub fn block_linear(&mut self, x: Var, w: Var, bias: Option<Var>) -> Result<Var> {
        let xv = self.value(x).as_complex("block_linear")?;
        let wv = self.value(w).as_complex("block_linear")?;
        let (m, n) = check_linear(xv.shape(), wv.shape())?;
        let batch = xv.len() / n.max(1);
        let a = block_matrix(wv, m, n);
        let xs = stack_rows(xv.re(), xv.im(), batch, n);
        let ys = kernels::linear(&xs, &a, batch, 2 * n, 2 * m);
        let (mut re, mut im) = unstack_rows(&ys, batch, m);
        let mut inputs = vec![x, w];
        if let Some(b) = bias {
            let bv = self.value(b).as_complex("block_linear")?;
            if bv.shape().dims() != [m] {
                return Err(Error::ShapeMismatch {
                    op: "block_linear",
                    lhs: Shape::new([m]),
                    rhs: bv.shape().clone(),
                });
            }
            for r in 0..batch {
                for j in 0..m {
                    re[r * m + j] += bv.re()[j];
                    im[r * m + j] += bv.im()[j];
                }
            }
            inputs.push(b);
        }
        let mut shape = xv.shape().dims().to_vec();
        *shape.last_mut().unwrap() = m;
        let value = Value::Complex(CTensor::from_raw(re, im, Shape::new(shape)));
        Ok(self.record("block_linear", &inputs, value, Box::new(BlockLinearOp { batch, inp: n, out: m })))
    }
}

/// `(out, in)` after checking `x: [.., in]` against `w: [out, in]`.
fn check_linear(x: &Shape, w: &Shape) -> Result<(usize, usize)> {
    if w.ndim() != 2 || x.ndim() == 0 || x.dims()[x.ndim() - 1] != w.dim(1) {
        return Err(Error::ShapeMismatch {
            op: "linear",
            lhs: x.clone(),
            rhs: w.clone(),
        });
    }
    Ok((w.dim(0), w.dim(1)))
}

/// Complex dense layer acting on the last axis.
#[derive(Clone, Debug)]
pub struct ComplexLinear {
    pub weight: ParamId,
    pub bias: Option<ParamId>,
    pub in_features: usize,
    pub out_features: usize,
    pub backend: Backend,
}

impl ComplexLinear {
    pub fn new<R: Rng + ?Sized>(
        store: &mut ParamStore,
        name: &str,
        in_features: usize,
        out_features: usize,
        bias: bool,
        backend: Backend,
        rng: &mut R,
    ) -> Self {
        let w = glorot_complex(rng, [out_features, in_features], in_features, out_features);
        let weight = store.add_complex(format!("{name}.weight"), w);
        let bias = bias.then(|| store.add_complex(format!("{name}.bias"), CTensor::zeros([out_features])));
        ComplexLinear {
            weight,
            bias,
            in_features,
            out_features,
            backend,
        }
    }

    /// Layer with the given `[out, in]` weight and optional `[out]` bias.
    pub fn from_weights(
        store: &mut ParamStore,
        name: &str,
        weight: CTensor,
        bias: Option<CTensor>,
        backend: Backend,
    ) -> Result<Self> {
        if weight.shape().ndim() != 2 {
            return Err(Error::InvalidShape {
                op: "ComplexLinear",
                reason: format!("weight must be 2-D, got {}", weight.shape()),
            });
        }
        let (out_features, in_features) = (weight.shape().dim(0), weight.shape().dim(1));
        if let Some(b) = &bias {
            if b.shape().dims() != [out_features] {
                return Err(Error::ShapeMismatch {
                    op: "ComplexLinear",
                    lhs: Shape::new([out_features]),
                    rhs: b.shape().clone(),
                });
            }
        }
        let weight = store.add_complex(format!("{name}.weight"), weight);
        let bias = bias.map(|b| store.add_complex(format!("{name}.bias"), b));
        Ok(ComplexLinear {
            weight,
            bias,
            in_features,
            out_features,
            backend,
        })
    }

    pub fn with_backend(&self, backend: Backend) -> Self {
        ComplexLinear { backend, ..self.clone() }
    }
}

impl Layer for ComplexLinear {
    fn forward(&self, tape: &mut Tape, store: &ParamStore, x: Var) -> Result<Var> {
        let w = tape.param(store, self.weight);
        let b = self.bias.map(|id| tape.param(store, id));
        let y = match self.backend {
            Backend::Block => return tape.block_linear(x, w, b),
            Backend::Naive => naive_product(tape, x, w, |t, a, b| t.linear(a, b))?,
            Backend::Gauss => gauss_product(tape, x, w, |t, a, b| t.linear(a, b))?,
        };
        match b {
            Some(b) => tape.add(y, b),
            None => Ok(y),
        }
    }

    fn params(&self) -> Vec<ParamId> {
        std::iter::once(self.weight).chain(self.bias).collect()
    }
}

/// Real dense layer, the building block of the real-valued baselines.
#[derive(Clone, Debug)]
pub struct RealLinear {
    pub weight: ParamId,
    pub bias: Option<ParamId>,
    pub in_features: usize,
    pub out_features: usize,
}

impl RealLinear {
    pub fn new<R: Rng + ?Sized>(
        store: &mut ParamStore,
        name: &str,
        in_features: usize,
        out_features: usize,
        bias: bool,
        rng: &mut R,
    ) -> Self {
        let w = glorot_real(rng, [out_features, in_features], in_features, out_features);
        let weight = store.add_real(format!("{name}.weight"), w);
        let bias = bias.then(|| store.add_real(format!("{name}.bias"), RTensor::zeros([out_features])));
        RealLinear {
            weight,
            bias,
            in_features,
            out_features,
        }
    }

    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, x: Var) -> Result<Var> {
        let w = tape.param(store, self.weight);
        let y = tape.linear(x, w)?;
        match self.bias {
            Some(id) => {
                let b = tape.param(store, id);
                tape.add(y, b)
            }
            None => Ok(y),
        }
    }

    pub fn params(&self) -> Vec<ParamId> {
        std::iter::once(self.weight).chain(self.bias).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autograd::gradcheck::{check_params, FD_STEP};
    use crate::autograd::tape::GradPair;
    use crate::ctensor::matmul_oracle;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_c(rng: &mut ChaCha8Rng, shape: &[usize]) -> CTensor {
        let n: usize = shape.iter().product();
        CTensor::new(
            (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
            (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
            shape,
        )
        .unwrap()
    }

    /// Row-wise application of the four-product oracle.
    fn oracle(w: &CTensor, b: Option<&CTensor>, z: &CTensor) -> CTensor {
        let (m, n) = (w.shape().dim(0), w.shape().dim(1));
        let rows = z.len() / n;
        let (mut re, mut im) = (Vec::new(), Vec::new());
        for r in 0..rows {
            let row = CTensor::new(z.re()[r * n..(r + 1) * n].to_vec(), z.im()[r * n..(r + 1) * n].to_vec(), [n]).unwrap();
            let mut y = matmul_oracle(w, &row).unwrap();
            if let Some(b) = b {
                y = y.add(b).unwrap();
            }
            re.extend_from_slice(y.re());
            im.extend_from_slice(y.im());
        }
        CTensor::new(re, im, [rows, m]).unwrap()
    }

    /// Input and parameter gradients of `L = Σ g_r·Re(y) + g_i·Im(y)`.
    fn pullback(layer: &ComplexLinear, store: &mut ParamStore, z: &CTensor, g: &GradPair) -> Vec<GradPair> {
        let mut t = Tape::new();
        let x = t.input(z.clone());
        let y = layer.forward(&mut t, store, x).unwrap();
        let (yr, yi) = (t.re(y).unwrap(), t.im(y).unwrap());
        let (gr, gi) = (t.constant(g.g_r.clone()), t.constant(g.g_i.clone()));
        let (a, b) = (t.mul(yr, gr).unwrap(), t.mul(yi, gi).unwrap());
        let s = t.add(a, b).unwrap();
        let l = t.sum(s).unwrap();
        let grads = t.backward_into(l, store).unwrap();
        let mut out = vec![grads.pair(x).unwrap()];
        out.extend(layer.params().iter().map(|&id| store.grad(id).unwrap().clone()));
        out
    }

    #[test]
    fn identity_and_rotation() {
        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let z = random_c(&mut rng, &[3, 4]);
        let eye = ComplexLinear::from_weights(&mut store, "eye", CTensor::eye(4), None, Backend::Naive).unwrap();
        let rot = ComplexLinear::from_weights(&mut store, "rot", CTensor::from_pairs(&[(0.0, 1.0)]).reshape([1, 1]).unwrap(), None, Backend::Naive).unwrap();
        for be in Backend::ALL {
            assert!(eye.with_backend(be).apply(&store, &z).unwrap().max_abs_diff(&z) < 1e-15);
            let one = CTensor::from_pairs(&[(1.0, 0.0)]).reshape([1, 1]).unwrap();
            let y = rot.with_backend(be).apply(&store, &one).unwrap();
            assert_eq!(y.get(0), (0.0, 1.0), "{be}");
        }
    }

    #[test]
    fn backends_match_oracle_on_random_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let (b, n, m) = (rng.random_range(1..5), rng.random_range(1..9), rng.random_range(1..9));
            let mut store = ParamStore::new();
            let w = random_c(&mut rng, &[m, n]);
            let bias = random_c(&mut rng, &[m]);
            let z = random_c(&mut rng, &[b, n]);
            let want = oracle(&w, Some(&bias), &z);
            let layer = ComplexLinear::from_weights(&mut store, "l", w, Some(bias), Backend::Naive).unwrap();
            for be in Backend::ALL {
                let got = layer.with_backend(be).apply(&store, &z).unwrap();
                assert!(got.max_abs_diff(&want) <= 1e-10, "{be}");
            }
        }
    }

    #[test]
    fn backward_examples() {
        let mut store = ParamStore::new();
        let eye = ComplexLinear::from_weights(&mut store, "eye", CTensor::eye(2), None, Backend::Naive).unwrap();
        let z = CTensor::from_pairs(&[(0.3, -0.2), (1.0, 0.5)]).reshape([1, 2]).unwrap();
        let g = GradPair {
            g_r: RTensor::new(vec![0.7, -1.1], [1, 2]).unwrap(),
            g_i: RTensor::new(vec![0.4, 2.0], [1, 2]).unwrap(),
        };
        for be in Backend::ALL {
            let gx = &pullback(&eye.with_backend(be), &mut store, &z, &g)[0];
            assert_eq!(gx, &g, "{be}");
        }

        // W = [[i]]: g_x = W_rᵀg_r + W_iᵀg_i, g_y = W_rᵀg_i − W_iᵀg_r
        let rot = ComplexLinear::from_weights(&mut store, "rot", CTensor::from_pairs(&[(0.0, 1.0)]).reshape([1, 1]).unwrap(), None, Backend::Naive).unwrap();
        let z = CTensor::from_pairs(&[(0.25, 0.5)]).reshape([1, 1]).unwrap();
        let g = GradPair {
            g_r: RTensor::new(vec![1.0], [1, 1]).unwrap(),
            g_i: RTensor::new(vec![0.0], [1, 1]).unwrap(),
        };
        let (wr, wi, gr, gi) = (0.0, 1.0, 1.0, 0.0);
        let want = (wr * gr + wi * gi, wr * gi - wi * gr);
        assert_eq!(want, (0.0, -1.0));
        for be in Backend::ALL {
            let gx = &pullback(&rot.with_backend(be), &mut store, &z, &g)[0];
            assert_eq!((gx.g_r.data()[0], gx.g_i.data()[0]), want, "{be}");
        }
    }

    #[test]
    fn gradients_match_finite_differences_and_each_other() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut store = ParamStore::new();
        let layer = ComplexLinear::from_weights(&mut store, "l", random_c(&mut rng, &[3, 3]), Some(random_c(&mut rng, &[3])), Backend::Naive).unwrap();
        let z = random_c(&mut rng, &[2, 3]);
        let target = random_c(&mut rng, &[2, 3]);
        let ids = layer.params();
        let mut per_backend = Vec::new();
        for be in Backend::ALL {
            let l = layer.with_backend(be);
            let report = check_params(&mut store, &ids, FD_STEP, |t, s| {
                let x = t.constant(z.clone());
                let y = l.forward(t, s, x)?;
                let tv = t.constant(target.clone());
                let d = t.sub(y, tv)?;
                let m = t.cabs(d)?;
                let m2 = t.mul(m, m)?;
                t.sum(m2)
            })
            .unwrap();
            assert!(report.max_rel_error < 1e-6, "{be}: {report:?}");
            per_backend.push(ids.iter().map(|&id| store.grad(id).unwrap().clone()).collect::<Vec<_>>());
        }
        for other in &per_backend[1..] {
            for (a, b) in per_backend[0].iter().zip(other) {
                assert!(a.max_abs_diff(b) <= 1e-8);
            }
        }
    }

    #[test]
    fn node_counts_are_fixed_per_backend() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut store = ParamStore::new();
        let layer = ComplexLinear::new(&mut store, "l", 4, 5, true, Backend::Naive, &mut rng);
        let z = random_c(&mut rng, &[2, 4]);
        let counts: Vec<usize> = Backend::ALL
            .iter()
            .map(|&be| {
                let mut t = Tape::new();
                let x = t.constant(z.clone());
                layer.with_backend(be).forward(&mut t, &store, x).unwrap();
                t.node_count()
            })
            .collect();
        // leaves (x, W, b) + ops
        assert_eq!(counts, vec![15, 17, 4]);
    }

    #[test]
    fn width_mismatch_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut store = ParamStore::new();
        let layer = ComplexLinear::new(&mut store, "l", 4, 5, false, Backend::Block, &mut rng);
        let z = random_c(&mut rng, &[2, 3]);
        for be in Backend::ALL {
            assert!(layer.with_backend(be).apply(&store, &z).is_err());
        }
    }
}
