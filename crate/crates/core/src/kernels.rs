//! Real-valued compute kernels shared by every backend.
//!
//! Matrices are row-major. The dense product goes through `matrixmultiply`;
//! convolution is im2col followed by one GEMM per (batch, group).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `c = alpha * op(a) * op(b) + beta * c`, where `op(a)` is `m×k`, `op(b)` is
/// `k×n` and `c` is `m×n`. `ta`/`tb` mean the stored operand is transposed
/// (stored as `k×m` / `n×k`).
#[allow(clippy::too_many_arguments)]
pub fn gemm(
    m: usize,
    k: usize,
    n: usize,
    alpha: f64,
    a: &[f64],
    ta: bool,
    b: &[f64],
    tb: bool,
    beta: f64,
    c: &mut [f64],
) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    if m == 0 || n == 0 {
        return;
    }
    let (rsa, csa) = if ta { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if tb { (1, k as isize) } else { (n as isize, 1) };
    // SAFETY: the slices cover exactly the strided extents described above.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// `y[b×out] = x[b×in] · wᵀ` with `w: [out×in]`.
pub fn linear(x: &[f64], w: &[f64], batch: usize, inp: usize, out: usize) -> Vec<f64> {
    let mut y = vec![0.0; batch * out];
    gemm(batch, inp, out, 1.0, x, false, w, true, 0.0, &mut y);
    y
}

/// Gradient of [`linear`] with respect to `x`: `gy · w`.
pub fn linear_grad_input(gy: &[f64], w: &[f64], batch: usize, inp: usize, out: usize) -> Vec<f64> {
    let mut gx = vec![0.0; batch * inp];
    gemm(batch, out, inp, 1.0, gy, false, w, false, 0.0, &mut gx);
    gx
}

/// Gradient of [`linear`] with respect to `w`: `gyᵀ · x`.
pub fn linear_grad_weight(gy: &[f64], x: &[f64], batch: usize, inp: usize, out: usize) -> Vec<f64> {
    let mut gw = vec![0.0; out * inp];
    gemm(out, batch, inp, 1.0, gy, true, x, false, 0.0, &mut gw);
    gw
}

/// Stride, padding and dilation along (height, width). 1-D convolutions use
/// height 1 with unit stride/dilation and zero padding on that axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvGeometry {
    pub stride: (usize, usize),
    pub padding: (usize, usize),
    pub dilation: (usize, usize),
    pub groups: usize,
}

impl Default for ConvGeometry {
    fn default() -> Self {
        ConvGeometry {
            stride: (1, 1),
            padding: (0, 0),
            dilation: (1, 1),
            groups: 1,
        }
    }
}

impl ConvGeometry {
    pub fn one_d(stride: usize, padding: usize, dilation: usize, groups: usize) -> Self {
        ConvGeometry {
            stride: (1, stride),
            padding: (0, padding),
            dilation: (1, dilation),
            groups,
        }
    }

    /// `floor((L + 2·pad − dilation·(k−1) − 1)/stride) + 1`, or `None` when
    /// the kernel does not fit.
    pub fn out_len(len: usize, k: usize, stride: usize, pad: usize, dil: usize) -> Option<usize> {
        let span = dil * (k - 1) + 1;
        let padded = len + 2 * pad;
        if k == 0 || stride == 0 || dil == 0 || padded < span {
            return None;
        }
        Some((padded - span) / stride + 1)
    }
}

/// Fully resolved problem size for one real convolution call.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvDims {
    pub batch: usize,
    pub cin: usize,
    pub cout: usize,
    pub h: usize,
    pub w: usize,
    pub kh: usize,
    pub kw: usize,
    pub oh: usize,
    pub ow: usize,
    pub geom: ConvGeometry,
}

impl ConvDims {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        batch: usize,
        cin: usize,
        h: usize,
        w: usize,
        cout: usize,
        kh: usize,
        kw: usize,
        geom: ConvGeometry,
    ) -> Result<Self> {
        let g = geom.groups;
        if g == 0 || !cin.is_multiple_of(g) || !cout.is_multiple_of(g) {
            return Err(Error::Config(format!(
                "groups={g} must divide in_channels={cin} and out_channels={cout}"
            )));
        }
        let oh = ConvGeometry::out_len(h, kh, geom.stride.0, geom.padding.0, geom.dilation.0);
        let ow = ConvGeometry::out_len(w, kw, geom.stride.1, geom.padding.1, geom.dilation.1);
        match (oh, ow) {
            (Some(oh), Some(ow)) => Ok(ConvDims {
                batch,
                cin,
                cout,
                h,
                w,
                kh,
                kw,
                oh,
                ow,
                geom,
            }),
            _ => Err(Error::InvalidShape {
                op: "conv",
                reason: format!("kernel {kh}×{kw} does not fit input {h}×{w} with {geom:?}"),
            }),
        }
    }

    pub fn input_len(&self) -> usize {
        self.batch * self.cin * self.h * self.w
    }

    pub fn output_len(&self) -> usize {
        self.batch * self.cout * self.oh * self.ow
    }

    pub fn kernel_len(&self) -> usize {
        self.cout * (self.cin / self.geom.groups) * self.kh * self.kw
    }

    fn cin_g(&self) -> usize {
        self.cin / self.geom.groups
    }

    fn cout_g(&self) -> usize {
        self.cout / self.geom.groups
    }

    /// Rows of the im2col matrix for one group.
    fn col_rows(&self) -> usize {
        self.cin_g() * self.kh * self.kw
    }

    fn col_cols(&self) -> usize {
        self.oh * self.ow
    }
}

fn im2col(d: &ConvDims, x: &[f64], b: usize, g: usize, cols: &mut [f64]) {
    let (sh, sw) = d.geom.stride;
    let (ph, pw) = d.geom.padding;
    let (dh, dw) = d.geom.dilation;
    let ncols = d.col_cols();
    let cin_g = d.cin_g();
    for c in 0..cin_g {
        let plane = &x[((b * d.cin) + g * cin_g + c) * d.h * d.w..][..d.h * d.w];
        for ki in 0..d.kh {
            for kj in 0..d.kw {
                let row = (c * d.kh + ki) * d.kw + kj;
                let dst = &mut cols[row * ncols..(row + 1) * ncols];
                for oi in 0..d.oh {
                    let ii = (oi * sh + ki * dh) as isize - ph as isize;
                    let line = &mut dst[oi * d.ow..(oi + 1) * d.ow];
                    if ii < 0 || ii >= d.h as isize {
                        line.fill(0.0);
                        continue;
                    }
                    let src = &plane[ii as usize * d.w..][..d.w];
                    for (oj, v) in line.iter_mut().enumerate() {
                        let jj = (oj * sw + kj * dw) as isize - pw as isize;
                        *v = if jj < 0 || jj >= d.w as isize {
                            0.0
                        } else {
                            src[jj as usize]
                        };
                    }
                }
            }
        }
    }
}

fn col2im(d: &ConvDims, cols: &[f64], b: usize, g: usize, gx: &mut [f64]) {
    let (sh, sw) = d.geom.stride;
    let (ph, pw) = d.geom.padding;
    let (dh, dw) = d.geom.dilation;
    let ncols = d.col_cols();
    let cin_g = d.cin_g();
    for c in 0..cin_g {
        let base = ((b * d.cin) + g * cin_g + c) * d.h * d.w;
        for ki in 0..d.kh {
            for kj in 0..d.kw {
                let row = (c * d.kh + ki) * d.kw + kj;
                let src = &cols[row * ncols..(row + 1) * ncols];
                for oi in 0..d.oh {
                    let ii = (oi * sh + ki * dh) as isize - ph as isize;
                    if ii < 0 || ii >= d.h as isize {
                        continue;
                    }
                    let dst = &mut gx[base + ii as usize * d.w..][..d.w];
                    for oj in 0..d.ow {
                        let jj = (oj * sw + kj * dw) as isize - pw as isize;
                        if jj >= 0 && jj < d.w as isize {
                            dst[jj as usize] += src[oi * d.ow + oj];
                        }
                    }
                }
            }
        }
    }
}

/// Cross-correlation `y[b, o] = Σ_c x[b, c] ⋆ k[o, c]` (no kernel flip).
/// Layouts: `x [B, Cin, H, W]`, `k [Cout, Cin/g, kh, kw]`, `y [B, Cout, oh, ow]`.
pub fn conv2d(d: &ConvDims, x: &[f64], k: &[f64]) -> Vec<f64> {
    debug_assert_eq!(x.len(), d.input_len());
    debug_assert_eq!(k.len(), d.kernel_len());
    let (rows, ncols) = (d.col_rows(), d.col_cols());
    let cout_g = d.cout_g();
    let mut cols = vec![0.0; rows * ncols];
    let mut y = vec![0.0; d.output_len()];
    for b in 0..d.batch {
        for g in 0..d.geom.groups {
            im2col(d, x, b, g, &mut cols);
            let kg = &k[g * cout_g * rows..(g + 1) * cout_g * rows];
            let yg = &mut y[(b * d.cout + g * cout_g) * ncols..][..cout_g * ncols];
            gemm(cout_g, rows, ncols, 1.0, kg, false, &cols, false, 0.0, yg);
        }
    }
    y
}

/// Transposed convolution of the output gradient: gradient of [`conv2d`]
/// with respect to its input.
pub fn conv2d_grad_input(d: &ConvDims, gy: &[f64], k: &[f64]) -> Vec<f64> {
    let (rows, ncols) = (d.col_rows(), d.col_cols());
    let cout_g = d.cout_g();
    let mut cols = vec![0.0; rows * ncols];
    let mut gx = vec![0.0; d.input_len()];
    for b in 0..d.batch {
        for g in 0..d.geom.groups {
            let kg = &k[g * cout_g * rows..(g + 1) * cout_g * rows];
            let gyg = &gy[(b * d.cout + g * cout_g) * ncols..][..cout_g * ncols];
            gemm(rows, cout_g, ncols, 1.0, kg, true, gyg, false, 0.0, &mut cols);
            col2im(d, &cols, b, g, &mut gx);
        }
    }
    gx
}

/// Gradient of [`conv2d`] with respect to the kernel.
pub fn conv2d_grad_kernel(d: &ConvDims, gy: &[f64], x: &[f64]) -> Vec<f64> {
    let (rows, ncols) = (d.col_rows(), d.col_cols());
    let cout_g = d.cout_g();
    let mut cols = vec![0.0; rows * ncols];
    let mut gk = vec![0.0; d.kernel_len()];
    for b in 0..d.batch {
        for g in 0..d.geom.groups {
            im2col(d, x, b, g, &mut cols);
            let gyg = &gy[(b * d.cout + g * cout_g) * ncols..][..cout_g * ncols];
            let gkg = &mut gk[g * cout_g * rows..(g + 1) * cout_g * rows];
            gemm(cout_g, ncols, rows, 1.0, gyg, false, &cols, true, 1.0, gkg);
        }
    }
    gk
}
