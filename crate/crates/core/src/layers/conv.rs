use rand::Rng;

use crate::autograd::ops::{conv_dims, conv_out_shape};
use crate::autograd::params::{ParamId, ParamStore};
use crate::autograd::tape::{Backward, Grad, Tape, Value, Var};
use crate::ctensor::{CTensor, Shape};
use crate::error::{Error, Result};
use crate::kernels::{self, ConvDims, ConvGeometry};
use crate::layers::init::glorot_complex;
use crate::layers::linear::{gauss_product, naive_product};
use crate::layers::{Backend, Layer};

/// Interleaves two `[B, C, S]` planes into `[B, 2C, S]` with each group's
/// channels laid out as `[re; im]`.
fn stack_channels(re: &[f64], im: &[f64], batch: usize, channels: usize, groups: usize, plane: usize) -> Vec<f64> {
    let cg = channels / groups;
    let mut s = vec![0.0; 2 * re.len()];
    for b in 0..batch {
        for g in 0..groups {
            for p in 0..cg {
                let src = (b * channels + g * cg + p) * plane;
                let dst_re = (b * 2 * channels + g * 2 * cg + p) * plane;
                let dst_im = dst_re + cg * plane;
                s[dst_re..dst_re + plane].copy_from_slice(&re[src..src + plane]);
                s[dst_im..dst_im + plane].copy_from_slice(&im[src..src + plane]);
            }
        }
    }
    s
}

fn unstack_channels(s: &[f64], batch: usize, channels: usize, groups: usize, plane: usize) -> (Vec<f64>, Vec<f64>) {
    let cg = channels / groups;
    let n = batch * channels * plane;
    let (mut re, mut im) = (vec![0.0; n], vec![0.0; n]);
    for b in 0..batch {
        for g in 0..groups {
            for p in 0..cg {
                let dst = (b * channels + g * cg + p) * plane;
                let src_re = (b * 2 * channels + g * 2 * cg + p) * plane;
                let src_im = src_re + cg * plane;
                re[dst..dst + plane].copy_from_slice(&s[src_re..src_re + plane]);
                im[dst..dst + plane].copy_from_slice(&s[src_im..src_im + plane]);
            }
        }
    }
    (re, im)
}

/// Real kernel `[2O, 2C/g, kh, kw]` holding `[[a, −b], [b, a]]` per group.
fn block_kernel(k: &CTensor, d: &ConvDims) -> Vec<f64> {
    let g = d.geom.groups;
    let (og, cg) = (d.cout / g, d.cin / g);
    let taps = d.kh * d.kw;
    let mut out = vec![0.0; 4 * k.len()];
    let (a, b) = (k.re(), k.im());
    for gi in 0..g {
        for q in 0..og {
            let o = gi * og + q;
            let (row_re, row_im) = (gi * 2 * og + q, gi * 2 * og + og + q);
            for p in 0..cg {
                let src = (o * cg + p) * taps;
                let at = |row: usize, col: usize| (row * 2 * cg + col) * taps;
                for t in 0..taps {
                    out[at(row_re, p) + t] = a[src + t];
                    out[at(row_re, cg + p) + t] = -b[src + t];
                    out[at(row_im, p) + t] = b[src + t];
                    out[at(row_im, cg + p) + t] = a[src + t];
                }
            }
        }
    }
    out
}

fn doubled(d: &ConvDims) -> Result<ConvDims> {
    ConvDims::new(d.batch, 2 * d.cin, d.h, d.w, 2 * d.cout, d.kh, d.kw, d.geom)
}

struct BlockConvOp {
    dims: ConvDims,
}

impl Backward for BlockConvOp {
    fn backward(&self, inputs: &[&Value], _: &Value, g: &Grad, needs: &[bool]) -> Result<Vec<Option<Grad>>> {
        let d = &self.dims;
        let big = doubled(d)?;
        let groups = d.geom.groups;
        let (in_plane, out_plane) = (d.h * d.w, d.oh * d.ow);
        let x = inputs[0].as_complex("block_conv")?;
        let k = inputs[1].as_complex("block_conv")?;
        let gi = g.im_or_zero();
        let gs = stack_channels(&g.re, &gi, d.batch, d.cout, groups, out_plane);
        let mut out = vec![None; inputs.len()];
        if needs[0] {
            let kb = block_kernel(k, d);
            let gx = kernels::conv2d_grad_input(&big, &gs, &kb);
            let (re, im) = unstack_channels(&gx, d.batch, d.cin, groups, in_plane);
            out[0] = Some(Grad::complex(re, im));
        }
        if needs[1] {
            let xs = stack_channels(x.re(), x.im(), d.batch, d.cin, groups, in_plane);
            let dk = kernels::conv2d_grad_kernel(&big, &gs, &xs);
            let (og, cg) = (d.cout / groups, d.cin / groups);
            let taps = d.kh * d.kw;
            let (mut da, mut db) = (vec![0.0; k.len()], vec![0.0; k.len()]);
            for gidx in 0..groups {
                for q in 0..og {
                    let o = gidx * og + q;
                    let (row_re, row_im) = (gidx * 2 * og + q, gidx * 2 * og + og + q);
                    let at = |row: usize, col: usize| (row * 2 * cg + col) * taps;
                    for p in 0..cg {
                        let dst = (o * cg + p) * taps;
                        for t in 0..taps {
                            da[dst + t] = dk[at(row_re, p) + t] + dk[at(row_im, cg + p) + t];
                            db[dst + t] = dk[at(row_im, p) + t] - dk[at(row_re, cg + p) + t];
                        }
                    }
                }
            }
            out[1] = Some(Grad::complex(da, db));
        }
        if inputs.len() == 3 && needs[2] {
            let (mut br, mut bi) = (vec![0.0; d.cout], vec![0.0; d.cout]);
            for b in 0..d.batch {
                for o in 0..d.cout {
                    let s = (b * d.cout + o) * out_plane;
                    br[o] += g.re[s..s + out_plane].iter().sum::<f64>();
                    bi[o] += gi[s..s + out_plane].iter().sum::<f64>();
                }
            }
            out[2] = Some(Grad::complex(br, bi));
        }
        Ok(out)
    }
}

impl Tape {
    /// Fused complex cross-correlation through one real convolution on
    /// stacked channels. `bias` has shape `[O, 1]` or `[O, 1, 1]`.
    pub fn block_conv(&mut self, x: Var, k: Var, bias: Option<Var>, geom: ConvGeometry) -> Result<Var> {
        let xv = self.value(x).as_complex("block_conv")?;
        let kv = self.value(k).as_complex("block_conv")?;
        let d = conv_dims(xv.shape(), kv.shape(), geom)?;
        let big = doubled(&d)?;
        let (in_plane, out_plane) = (d.h * d.w, d.oh * d.ow);
        let xs = stack_channels(xv.re(), xv.im(), d.batch, d.cin, geom.groups, in_plane);
        let ys = kernels::conv2d(&big, &xs, &block_kernel(kv, &d));
        let (mut re, mut im) = unstack_channels(&ys, d.batch, d.cout, geom.groups, out_plane);
        let mut inputs = vec![x, k];
        if let Some(b) = bias {
            let bv = self.value(b).as_complex("block_conv")?;
            if bv.len() != d.cout {
                return Err(Error::ShapeMismatch {
                    op: "block_conv",
                    lhs: Shape::new([d.cout]),
                    rhs: bv.shape().clone(),
                });
            }
            for bi in 0..d.batch {
                for o in 0..d.cout {
                    let s = (bi * d.cout + o) * out_plane;
                    re[s..s + out_plane].iter_mut().for_each(|v| *v += bv.re()[o]);
                    im[s..s + out_plane].iter_mut().for_each(|v| *v += bv.im()[o]);
                }
            }
            inputs.push(b);
        }
        let value = Value::Complex(CTensor::from_raw(re, im, conv_out_shape(xv.shape(), &d)));
        Ok(self.record("block_conv", &inputs, value, Box::new(BlockConvOp { dims: d })))
    }
}

fn conv_forward(
    tape: &mut Tape,
    store: &ParamStore,
    x: Var,
    kernel: ParamId,
    bias: Option<ParamId>,
    geom: ConvGeometry,
    backend: Backend,
) -> Result<Var> {
    let k = tape.param(store, kernel);
    let b = bias.map(|id| tape.param(store, id));
    let y = match backend {
        Backend::Block => return tape.block_conv(x, k, b, geom),
        Backend::Naive => naive_product(tape, x, k, |t, a, w| t.conv(a, w, geom))?,
        Backend::Gauss => gauss_product(tape, x, k, |t, a, w| t.conv(a, w, geom))?,
    };
    match b {
        Some(b) => tape.add(y, b),
        None => Ok(y),
    }
}

fn check_groups(cin: usize, cout: usize, groups: usize) -> Result<()> {
    if groups == 0 || !cin.is_multiple_of(groups) || !cout.is_multiple_of(groups) {
        return Err(Error::Config(format!(
            "groups={groups} must divide in_channels={cin} and out_channels={cout}"
        )));
    }
    Ok(())
}

/// Complex cross-correlation over `[B, C, L]`.
#[derive(Clone, Debug)]
pub struct ComplexConv1d {
    pub kernel: ParamId,
    pub bias: Option<ParamId>,
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel_size: usize,
    pub geom: ConvGeometry,
    pub backend: Backend,
}

impl ComplexConv1d {
    #[allow(clippy::too_many_arguments)]
    pub fn new<R: Rng + ?Sized>(
        store: &mut ParamStore,
        name: &str,
        in_channels: usize,
        out_channels: usize,
        kernel_size: usize,
        geom: ConvGeometry,
        bias: bool,
        backend: Backend,
        rng: &mut R,
    ) -> Result<Self> {
        check_groups(in_channels, out_channels, geom.groups)?;
        let cg = in_channels / geom.groups;
        let fan_in = cg * kernel_size;
        let fan_out = out_channels / geom.groups * kernel_size;
        let k = glorot_complex(rng, [out_channels, cg, kernel_size], fan_in, fan_out);
        let kernel = store.add_complex(format!("{name}.kernel"), k);
        let bias = bias.then(|| store.add_complex(format!("{name}.bias"), CTensor::zeros([out_channels, 1])));
        Ok(ComplexConv1d {
            kernel,
            bias,
            in_channels,
            out_channels,
            kernel_size,
            geom,
            backend,
        })
    }

    /// Kernel `[O, C/g, K]`, optional bias `[O]`.
    pub fn from_weights(
        store: &mut ParamStore,
        name: &str,
        kernel: CTensor,
        bias: Option<CTensor>,
        geom: ConvGeometry,
        backend: Backend,
    ) -> Result<Self> {
        let d = kernel.shape().dims().to_vec();
        if d.len() != 3 {
            return Err(Error::InvalidShape {
                op: "ComplexConv1d",
                reason: format!("kernel must be 3-D, got {}", kernel.shape()),
            });
        }
        check_groups(d[1] * geom.groups, d[0], geom.groups)?;
        let bias = bias.map(|b| b.reshape([d[0], 1])).transpose()?;
        let kernel_id = store.add_complex(format!("{name}.kernel"), kernel);
        let bias = bias.map(|b| store.add_complex(format!("{name}.bias"), b));
        Ok(ComplexConv1d {
            kernel: kernel_id,
            bias,
            in_channels: d[1] * geom.groups,
            out_channels: d[0],
            kernel_size: d[2],
            geom,
            backend,
        })
    }

    pub fn with_backend(&self, backend: Backend) -> Self {
        ComplexConv1d { backend, ..self.clone() }
    }
}

impl Layer for ComplexConv1d {
    fn forward(&self, tape: &mut Tape, store: &ParamStore, x: Var) -> Result<Var> {
        conv_forward(tape, store, x, self.kernel, self.bias, self.geom, self.backend)
    }

    fn params(&self) -> Vec<ParamId> {
        std::iter::once(self.kernel).chain(self.bias).collect()
    }
}

/// Complex cross-correlation over `[B, C, H, W]`.
#[derive(Clone, Debug)]
pub struct ComplexConv2d {
    pub kernel: ParamId,
    pub bias: Option<ParamId>,
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel_size: (usize, usize),
    pub geom: ConvGeometry,
    pub backend: Backend,
}

impl ComplexConv2d {
    #[allow(clippy::too_many_arguments)]
    pub fn new<R: Rng + ?Sized>(
        store: &mut ParamStore,
        name: &str,
        in_channels: usize,
        out_channels: usize,
        kernel_size: (usize, usize),
        geom: ConvGeometry,
        bias: bool,
        backend: Backend,
        rng: &mut R,
    ) -> Result<Self> {
        check_groups(in_channels, out_channels, geom.groups)?;
        let cg = in_channels / geom.groups;
        let taps = kernel_size.0 * kernel_size.1;
        let k = glorot_complex(
            rng,
            [out_channels, cg, kernel_size.0, kernel_size.1],
            cg * taps,
            out_channels / geom.groups * taps,
        );
        let kernel = store.add_complex(format!("{name}.kernel"), k);
        let bias = bias.then(|| store.add_complex(format!("{name}.bias"), CTensor::zeros([out_channels, 1, 1])));
        Ok(ComplexConv2d {
            kernel,
            bias,
            in_channels,
            out_channels,
            kernel_size,
            geom,
            backend,
        })
    }

    /// Kernel `[O, C/g, kh, kw]`, optional bias `[O]`.
    pub fn from_weights(
        store: &mut ParamStore,
        name: &str,
        kernel: CTensor,
        bias: Option<CTensor>,
        geom: ConvGeometry,
        backend: Backend,
    ) -> Result<Self> {
        let d = kernel.shape().dims().to_vec();
        if d.len() != 4 {
            return Err(Error::InvalidShape {
                op: "ComplexConv2d",
                reason: format!("kernel must be 4-D, got {}", kernel.shape()),
            });
        }
        check_groups(d[1] * geom.groups, d[0], geom.groups)?;
        let bias = bias.map(|b| b.reshape([d[0], 1, 1])).transpose()?;
        let kernel_id = store.add_complex(format!("{name}.kernel"), kernel);
        let bias = bias.map(|b| store.add_complex(format!("{name}.bias"), b));
        Ok(ComplexConv2d {
            kernel: kernel_id,
            bias,
            in_channels: d[1] * geom.groups,
            out_channels: d[0],
            kernel_size: (d[2], d[3]),
            geom,
            backend,
        })
    }

    pub fn with_backend(&self, backend: Backend) -> Self {
        ComplexConv2d { backend, ..self.clone() }
    }
}

impl Layer for ComplexConv2d {
    fn forward(&self, tape: &mut Tape, store: &ParamStore, x: Var) -> Result<Var> {
        conv_forward(tape, store, x, self.kernel, self.bias, self.geom, self.backend)
    }

    fn params(&self) -> Vec<ParamId> {
        std::iter::once(self.kernel).chain(self.bias).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autograd::gradcheck::{check_params, FD_STEP};
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

    /// Direct complex cross-correlation with complex multiplies.
    fn oracle_2d(x: &CTensor, k: &CTensor, bias: Option<&CTensor>, g: ConvGeometry) -> CTensor {
        let [b, c, h, w] = x.shape().dims().try_into().unwrap();
        let [o, cg, kh, kw] = k.shape().dims().try_into().unwrap();
        let oh = (h + 2 * g.padding.0 - g.dilation.0 * (kh - 1) - 1) / g.stride.0 + 1;
        let ow = (w + 2 * g.padding.1 - g.dilation.1 * (kw - 1) - 1) / g.stride.1 + 1;
        let og = o / g.groups;
        let mut out = vec![(0.0, 0.0); b * o * oh * ow];
        for bi in 0..b {
            for oc in 0..o {
                let grp = oc / og;
                for i in 0..oh {
                    for j in 0..ow {
                        let mut acc = bias.map_or((0.0, 0.0), |bv| bv.get(oc));
                        for p in 0..cg {
                            let ic = grp * cg + p;
                            for u in 0..kh {
                                for v in 0..kw {
                                    let ii = (i * g.stride.0 + u * g.dilation.0) as isize - g.padding.0 as isize;
                                    let jj = (j * g.stride.1 + v * g.dilation.1) as isize - g.padding.1 as isize;
                                    if ii < 0 || jj < 0 || ii >= h as isize || jj >= w as isize {
                                        continue;
                                    }
                                    let (xr, xi) = x.get(((bi * c + ic) * h + ii as usize) * w + jj as usize);
                                    let (ar, ai) = k.get(((oc * cg + p) * kh + u) * kw + v);
                                    acc.0 += xr * ar - xi * ai;
                                    acc.1 += xr * ai + xi * ar;
                                }
                            }
                        }
                        out[((bi * o + oc) * oh + i) * ow + j] = acc;
                    }
                }
            }
        }
        CTensor::from_pairs(&out).reshape([b, o, oh, ow]).unwrap()
    }

    fn random_geometry(rng: &mut ChaCha8Rng, one_d: bool) -> ConvGeometry {
        let groups = [1, 1, 2][rng.random_range(0..3)];
        let s = rng.random_range(1..3);
        let p = rng.random_range(0..3);
        let dl = rng.random_range(1..3);
        if one_d {
            ConvGeometry::one_d(s, p, dl, groups)
        } else {
            ConvGeometry {
                stride: (s, rng.random_range(1..3)),
                padding: (p, rng.random_range(0..2)),
                dilation: (dl, 1),
                groups,
            }
        }
    }

    #[test]
    fn unit_kernels() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let z = random_c(&mut rng, &[2, 1, 6]);
        let mut store = ParamStore::new();
        for (k, f) in [((1.0, 0.0), [1.0, 0.0, 0.0, 1.0]), ((0.0, 1.0), [0.0, -1.0, 1.0, 0.0])] {
            let kernel = CTensor::from_pairs(&[k]).reshape([1, 1, 1]).unwrap();
            let layer = ComplexConv1d::from_weights(&mut store, "k", kernel, None, ConvGeometry::default(), Backend::Naive).unwrap();
            for be in Backend::ALL {
                let y = layer.with_backend(be).apply(&store, &z).unwrap();
                for i in 0..z.len() {
                    let (x, v) = z.get(i);
                    let want = (f[0] * x + f[1] * v, f[2] * x + f[3] * v);
                    assert_eq!(y.get(i), want, "{be}");
                }
            }
        }
    }

    #[test]
    fn conv1d_backends_match_nested_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut store = ParamStore::new();
        // the stated configuration first, then random geometry
        let (x, k) = (random_c(&mut rng, &[2, 2, 8]), random_c(&mut rng, &[3, 2, 3]));
        let layer = ComplexConv1d::from_weights(&mut store, "c", k.clone(), None, ConvGeometry::default(), Backend::Naive).unwrap();
        let want = oracle_2d(&x.reshape([2, 2, 1, 8]).unwrap(), &k.reshape([3, 2, 1, 3]).unwrap(), None, ConvGeometry::default());
        for be in Backend::ALL {
            let got = layer.with_backend(be).apply(&store, &x).unwrap();
            assert_eq!(got.shape().dims(), &[2, 3, 6]);
            assert!(got.reshape([2, 3, 1, 6]).unwrap().max_abs_diff(&want) <= 1e-10, "{be}");
        }
        for _ in 0..60 {
            let g = random_geometry(&mut rng, true);
            let (c, o) = (2 * rng.random_range(1..3), 2 * rng.random_range(1..3));
            let kk = rng.random_range(1..4);
            let len = rng.random_range(8..14);
            let x = random_c(&mut rng, &[2, c, len]);
            let k = random_c(&mut rng, &[o, c / g.groups, kk]);
            let bias = random_c(&mut rng, &[o]);
            let layer = ComplexConv1d::from_weights(&mut store, "r", k.clone(), Some(bias.clone()), g, Backend::Naive).unwrap();
            let want = oracle_2d(&x.reshape([2, c, 1, len]).unwrap(), &k.reshape([o, c / g.groups, 1, kk]).unwrap(), Some(&bias), g);
            for be in Backend::ALL {
                let got = layer.with_backend(be).apply(&store, &x).unwrap();
                assert!(got.reshape(want.shape().clone()).unwrap().max_abs_diff(&want) <= 1e-10, "{be} {g:?}");
            }
        }
    }

    #[test]
    fn conv2d_backends_match_nested_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut store = ParamStore::new();
        for _ in 0..30 {
            let g = random_geometry(&mut rng, false);
            let (c, o) = (2 * rng.random_range(1..3), 2 * rng.random_range(1..3));
            let (kh, kw) = (rng.random_range(1..4), rng.random_range(1..4));
            let (h, w) = (rng.random_range(6..9), rng.random_range(6..9));
            let x = random_c(&mut rng, &[2, c, h, w]);
            let k = random_c(&mut rng, &[o, c / g.groups, kh, kw]);
            let bias = random_c(&mut rng, &[o]);
            let layer = ComplexConv2d::from_weights(&mut store, "r", k.clone(), Some(bias.clone()), g, Backend::Naive).unwrap();
            let want = oracle_2d(&x, &k, Some(&bias), g);
            for be in Backend::ALL {
                let got = layer.with_backend(be).apply(&store, &x).unwrap();
                assert!(got.max_abs_diff(&want) <= 1e-10, "{be} {g:?}");
            }
        }
    }

    #[test]
    fn zero_kernel_gives_zeros() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut store = ParamStore::new();
        let layer = ComplexConv2d::from_weights(&mut store, "z", CTensor::zeros([3, 2, 2, 2]), None, ConvGeometry::default(), Backend::Naive).unwrap();
        let x = random_c(&mut rng, &[1, 2, 5, 5]);
        for be in Backend::ALL {
            let y = layer.with_backend(be).apply(&store, &x).unwrap();
            assert!(y.re().iter().chain(y.im()).all(|&v| v == 0.0));
        }
    }

    #[test]
    fn incompatible_geometry_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut store = ParamStore::new();
        let layer = ComplexConv1d::new(&mut store, "c", 2, 2, 5, ConvGeometry::default(), false, Backend::Block, &mut rng).unwrap();
        let short = random_c(&mut rng, &[1, 2, 3]);
        let wrong_channels = random_c(&mut rng, &[1, 3, 8]);
        for be in Backend::ALL {
            assert!(layer.with_backend(be).apply(&store, &short).is_err());
            assert!(layer.with_backend(be).apply(&store, &wrong_channels).is_err());
        }
        assert!(ComplexConv1d::new(&mut store, "g", 3, 2, 1, ConvGeometry::one_d(1, 0, 1, 2), false, Backend::Block, &mut rng).is_err());
    }

    #[test]
    fn conv_gradients_match_finite_differences_and_each_other() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut store = ParamStore::new();
        let g = ConvGeometry {
            stride: (1, 2),
            padding: (1, 1),
            dilation: (1, 1),
            groups: 2,
        };
        let layer = ComplexConv2d::from_weights(&mut store, "c", random_c(&mut rng, &[2, 1, 2, 3]), Some(random_c(&mut rng, &[2])), g, Backend::Naive).unwrap();
        let xin = store.add_complex("x", random_c(&mut rng, &[1, 2, 3, 5]));
        let ids = store.ids();
        let mut per_backend = Vec::new();
        for be in Backend::ALL {
            let l = layer.with_backend(be);
            let report = check_params(&mut store, &ids, FD_STEP, |t, s| {
                let x = t.param(s, xin);
                let y = l.forward(t, s, x)?;
                let m = t.cabs(y)?;
                let m2 = t.mul(m, m)?;
                let r = t.re(y)?;
                let a = t.sum(m2)?;
                let b = t.sum(r)?;
                t.add(a, b)
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
}
