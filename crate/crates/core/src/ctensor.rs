//! Dense complex tensors stored as split real/imaginary planes.
//!
//! Everything in the crate is built on [`CTensor`] (complex) and [`RTensor`]
//! (real). Both are row-major and immutable once constructed; operations
//! return new tensors.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Shape(Vec<usize>);

impl Shape {
    pub fn new(dims: impl Into<Vec<usize>>) -> Self {
        Shape(dims.into())
    }

    pub fn scalar() -> Self {
        Shape(Vec::new())
    }

    pub fn dims(&self) -> &[usize] {
        &self.0
    }

    pub fn ndim(&self) -> usize {
        self.0.len()
    }

    /// Product of the extents; a scalar has one element.
    pub fn numel(&self) -> usize {
        self.0.iter().product()
    }

    pub fn dim(&self, axis: usize) -> usize {
        self.0[axis]
    }

    /// Row-major strides.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.0.len()];
        for i in (0..self.0.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.0[i + 1];
        }
        strides
    }
}

impl From<&[usize]> for Shape {
    fn from(d: &[usize]) -> Self {
        Shape(d.to_vec())
    }
}

impl From<Vec<usize>> for Shape {
    fn from(d: Vec<usize>) -> Self {
        Shape(d)
    }
}

impl<const N: usize> From<[usize; N]> for Shape {
    fn from(d: [usize; N]) -> Self {
        Shape(d.to_vec())
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, "×")?;
            }
            write!(f, "{d}")?;
        }
        write!(f, "]")
    }
}

/// Numpy-style broadcast of two shapes, with flat source indices for every
/// output element.
#[derive(Debug, Clone)]
pub(crate) struct Broadcast {
    pub shape: Shape,
    pub lhs: Vec<usize>,
    pub rhs: Vec<usize>,
}

impl Broadcast {
    pub fn new(op: &'static str, a: &Shape, b: &Shape) -> Result<Self> {
        let nd = a.ndim().max(b.ndim());
        let pad = |s: &Shape| -> Vec<usize> {
            let mut d = vec![1; nd - s.ndim()];
            d.extend_from_slice(s.dims());
            d
        };
        let (da, db) = (pad(a), pad(b));
        let mut out = Vec::with_capacity(nd);
        for (&x, &y) in da.iter().zip(&db) {
            if x == y || y == 1 {
                out.push(x);
            } else if x == 1 {
                out.push(y);
            } else {
                return Err(Error::ShapeMismatch {
                    op,
                    lhs: a.clone(),
                    rhs: b.clone(),
                });
            }
        }
        let shape = Shape::new(out);
        let sa = Shape::new(da.clone()).strides();
        let sb = Shape::new(db.clone()).strides();
        let n = shape.numel();
        let (mut lhs, mut rhs) = (Vec::with_capacity(n), Vec::with_capacity(n));
        let mut idx = vec![0usize; nd];
        for _ in 0..n {
            let (mut ia, mut ib) = (0, 0);
            for k in 0..nd {
                if da[k] != 1 {
                    ia += idx[k] * sa[k];
                }
                if db[k] != 1 {
                    ib += idx[k] * sb[k];
                }
            }
            lhs.push(ia);
            rhs.push(ib);
            for k in (0..nd).rev() {
                idx[k] += 1;
                if idx[k] < shape.dim(k) {
                    break;
                }
                idx[k] = 0;
            }
        }
        Ok(Broadcast { shape, lhs, rhs })
    }
}

fn check_len(len: usize, shape: &Shape) -> Result<()> {
    if len != shape.numel() {
        return Err(Error::LengthMismatch {
            len,
            shape: shape.clone(),
        });
    }
    Ok(())
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

#[derive(Clone, Debug, PartialEq)]
pub struct RTensor {
    data: Vec<f64>,
    shape: Shape,
}

impl RTensor {
    pub fn new(data: Vec<f64>, shape: impl Into<Shape>) -> Result<Self> {
        let shape = shape.into();
        check_len(data.len(), &shape)?;
        if !all_finite(&data) {
            return Err(Error::NonFinite("RTensor::new"));
        }
        Ok(RTensor { data, shape })
    }

    /// Skips the finiteness scan; for results of kernels on finite inputs.
    pub(crate) fn from_raw(data: Vec<f64>, shape: Shape) -> Self {
        debug_assert_eq!(data.len(), shape.numel());
        RTensor { data, shape }
    }

    pub fn from_vec(data: Vec<f64>) -> Self {
        let n = data.len();
        RTensor::new(data, [n]).expect("finite 1-D data")
    }

    pub fn scalar(v: f64) -> Self {
        RTensor::from_raw(vec![v], Shape::scalar())
    }

    pub fn zeros(shape: impl Into<Shape>) -> Self {
        let shape = shape.into();
        RTensor::from_raw(vec![0.0; shape.numel()], shape)
    }

    pub fn full(shape: impl Into<Shape>, v: f64) -> Self {
        let shape = shape.into();
        RTensor::from_raw(vec![v; shape.numel()], shape)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn reshape(&self, shape: impl Into<Shape>) -> Result<Self> {
        let shape = shape.into();
        check_len(self.data.len(), &shape)?;
        Ok(RTensor::from_raw(self.data.clone(), shape))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        RTensor::from_raw(self.data.iter().map(|&v| f(v)).collect(), self.shape.clone())
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn max_abs_diff(&self, other: &RTensor) -> f64 {
        max_abs_diff(&self.data, &other.data)
    }
}

pub(crate) fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "max_abs_diff on unequal lengths");
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CTensor {
    re: Vec<f64>,
    im: Vec<f64>,
    shape: Shape,
}

impl CTensor {
    pub fn new(re: Vec<f64>, im: Vec<f64>, shape: impl Into<Shape>) -> Result<Self> {
        let shape = shape.into();
        check_len(re.len(), &shape)?;
        check_len(im.len(), &shape)?;
        if !all_finite(&re) || !all_finite(&im) {
            return Err(Error::NonFinite("CTensor::new"));
        }
        Ok(CTensor { re, im, shape })
    }

    pub(crate) fn from_raw(re: Vec<f64>, im: Vec<f64>, shape: Shape) -> Self {
        debug_assert_eq!(re.len(), shape.numel());
        debug_assert_eq!(im.len(), shape.numel());
        CTensor { re, im, shape }
    }

    pub fn from_real(r: &RTensor) -> Self {
        CTensor::from_raw(r.data.clone(), vec![0.0; r.len()], r.shape.clone())
    }

    pub fn from_pairs(values: &[(f64, f64)]) -> Self {
        let re = values.iter().map(|v| v.0).collect();
        let im = values.iter().map(|v| v.1).collect();
        CTensor::new(re, im, [values.len()]).expect("finite pairs")
    }

    pub fn zeros(shape: impl Into<Shape>) -> Self {
        let shape = shape.into();
        let n = shape.numel();
        CTensor::from_raw(vec![0.0; n], vec![0.0; n], shape)
    }

    /// Complex identity matrix of size n×n.
    pub fn eye(n: usize) -> Self {
        let mut re = vec![0.0; n * n];
        for i in 0..n {
            re[i * n + i] = 1.0;
        }
        CTensor::from_raw(re, vec![0.0; n * n], Shape::new([n, n]))
    }

    pub fn re(&self) -> &[f64] {
        &self.re
    }

    pub(crate) fn planes_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.re, &mut self.im)
    }

    pub fn im(&self) -> &[f64] {
        &self.im
    }

    pub fn real_part(&self) -> RTensor {
        RTensor::from_raw(self.re.clone(), self.shape.clone())
    }

    pub fn imag_part(&self) -> RTensor {
        RTensor::from_raw(self.im.clone(), self.shape.clone())
    }

    pub fn into_planes(self) -> (Vec<f64>, Vec<f64>, Shape) {
        (self.re, self.im, self.shape)
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.re.len()
    }

    pub fn is_empty(&self) -> bool {
        self.re.is_empty()
    }

    pub fn get(&self, i: usize) -> (f64, f64) {
        (self.re[i], self.im[i])
    }

    pub fn reshape(&self, shape: impl Into<Shape>) -> Result<Self> {
        let shape = shape.into();
        check_len(self.re.len(), &shape)?;
        Ok(CTensor::from_raw(self.re.clone(), self.im.clone(), shape))
    }

    pub fn conj(&self) -> Self {
        CTensor::from_raw(
            self.re.clone(),
            self.im.iter().map(|v| -v).collect(),
            self.shape.clone(),
        )
    }

    pub fn abs(&self) -> RTensor {
        RTensor::from_raw(
            self.re.iter().zip(&self.im).map(|(x, y)| x.hypot(*y)).collect(),
            self.shape.clone(),
        )
    }

    pub fn scale(&self, s: f64) -> Self {
        CTensor::from_raw(
            self.re.iter().map(|v| v * s).collect(),
            self.im.iter().map(|v| v * s).collect(),
            self.shape.clone(),
        )
    }

    pub fn add(&self, other: &CTensor) -> Result<Self> {
        let bc = Broadcast::new("add", &self.shape, &other.shape)?;
        let re = bc.lhs.iter().zip(&bc.rhs).map(|(&i, &j)| self.re[i] + other.re[j]);
        let im = bc.lhs.iter().zip(&bc.rhs).map(|(&i, &j)| self.im[i] + other.im[j]);
        Ok(CTensor::from_raw(re.collect(), im.collect(), bc.shape))
    }

    pub fn sub(&self, other: &CTensor) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }

    /// Largest absolute difference over both planes.
    pub fn max_abs_diff(&self, other: &CTensor) -> f64 {
        max_abs_diff(&self.re, &other.re).max(max_abs_diff(&self.im, &other.im))
    }
}

/// Principal phase in (−π, π]; zero magnitude maps to phase 0.
pub fn phase(x: f64, y: f64) -> f64 {
    if x == 0.0 && y == 0.0 {
        return 0.0;
    }
    let t = y.atan2(x);
    // atan2(-0.0, negative) lands on -π
    if t <= -PI {
        PI
    } else {
        t
    }
}

/// Splits `z` into magnitude and principal phase.
pub fn polar_decompose(z: &CTensor) -> (RTensor, RTensor) {
    let r = z.abs();
    let theta = z
        .re
        .iter()
        .zip(&z.im)
        .map(|(&x, &y)| phase(x, y))
        .collect();
    (r, RTensor::from_raw(theta, z.shape.clone()))
}

pub fn polar_compose(r: &RTensor, theta: &RTensor) -> Result<CTensor> {
    if r.shape != theta.shape {
        return Err(Error::ShapeMismatch {
            op: "polar_compose",
            lhs: r.shape.clone(),
            rhs: theta.shape.clone(),
        });
    }
    if let Some(&bad) = r.data.iter().find(|&&v| v < 0.0) {
        return Err(Error::InvalidMagnitude(bad));
    }
    let (re, im): (Vec<f64>, Vec<f64>) = r
        .data
        .iter()
        .zip(&theta.data)
        .map(|(&m, &t)| {
            let (s, c) = t.sin_cos();
            (m * c, m * s)
        })
        .unzip();
    CTensor::new(re, im, r.shape.clone())
}

/// Elementwise complex product with numpy-style broadcasting.
pub fn cmul(a: &CTensor, b: &CTensor) -> Result<CTensor> {
    let bc = Broadcast::new("cmul", &a.shape, &b.shape)?;
    let n = bc.shape.numel();
    let (mut re, mut im) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for (&i, &j) in bc.lhs.iter().zip(&bc.rhs) {
        let (x, y) = (a.re[i], a.im[i]);
        let (u, v) = (b.re[j], b.im[j]);
        re.push(x * u - y * v);
        im.push(x * v + y * u);
    }
    Ok(CTensor::from_raw(re, im, bc.shape))
}

/// Reference complex matrix–vector product `W z` for `W: [m×n]`, `z: [n]`,
/// built from four independent real products:
/// `Re = W_r x − W_i y`, `Im = W_i x + W_r y`.
pub fn matmul_oracle(w: &CTensor, z: &CTensor) -> Result<CTensor> {
    if w.shape.ndim() != 2 || z.shape.ndim() != 1 || w.shape.dim(1) != z.shape.dim(0) {
        return Err(Error::ShapeMismatch {
            op: "matmul_oracle",
            lhs: w.shape.clone(),
            rhs: z.shape.clone(),
        });
    }
    let (m, n) = (w.shape.dim(0), w.shape.dim(1));
    let real_mv = |mat: &[f64], v: &[f64]| -> Vec<f64> {
        (0..m)
            .map(|i| (0..n).map(|j| mat[i * n + j] * v[j]).sum())
            .collect()
    };
    let wr_x = real_mv(&w.re, &z.re);
    let wi_y = real_mv(&w.im, &z.im);
    let wi_x = real_mv(&w.im, &z.re);
    let wr_y = real_mv(&w.re, &z.im);
    let re = wr_x.iter().zip(&wi_y).map(|(a, b)| a - b).collect();
    let im = wi_x.iter().zip(&wr_y).map(|(a, b)| a + b).collect();
    Ok(CTensor::from_raw(re, im, Shape::new([m])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c1(x: f64, y: f64) -> CTensor {
        CTensor::from_pairs(&[(x, y)])
    }

    #[test]
    fn shape_basics() {
        assert_eq!(Shape::scalar().numel(), 1);
        assert_eq!(Shape::new([2, 3, 4]).numel(), 24);
        assert_eq!(Shape::new([2, 3, 4]).strides(), vec![12, 4, 1]);
        assert_eq!(Shape::new([0, 3]).numel(), 0);
    }

    #[test]
    fn construction_rejects_bad_lengths_and_nan() {
        assert!(CTensor::new(vec![1.0], vec![1.0, 2.0], [1]).is_err());
        assert!(CTensor::new(vec![f64::NAN], vec![0.0], [1]).is_err());
        assert!(RTensor::new(vec![f64::INFINITY], [1]).is_err());
    }

    #[test]
    fn polar_examples() {
        let (r, t) = polar_decompose(&c1(3.0, 4.0));
        assert_eq!(r.data()[0], 5.0);
        assert!((t.data()[0] - 4f64.atan2(3.0)).abs() < 1e-15);
        assert!((t.data()[0] - 0.9273).abs() < 1e-4);

        let (r, t) = polar_decompose(&c1(-1.0, 0.0));
        assert_eq!((r.data()[0], t.data()[0]), (1.0, PI));
        let (_, t) = polar_decompose(&c1(-1.0, -0.0));
        assert_eq!(t.data()[0], PI);

        let (r, t) = polar_decompose(&c1(0.0, 0.0));
        assert_eq!((r.data()[0], t.data()[0]), (0.0, 0.0));
    }

    #[test]
    fn polar_compose_examples() {
        let z = polar_compose(&RTensor::from_vec(vec![1.0]), &RTensor::from_vec(vec![0.0])).unwrap();
        assert_eq!(z.get(0), (1.0, 0.0));
        let z = polar_compose(&RTensor::from_vec(vec![2.0]), &RTensor::from_vec(vec![PI / 2.0])).unwrap();
        assert!(z.re()[0].abs() < 1e-15 && (z.im()[0] - 2.0).abs() < 1e-15);
        let z = polar_compose(&RTensor::from_vec(vec![5.0]), &RTensor::from_vec(vec![0.9273])).unwrap();
        // 0.9273 is a 4-digit rounding of atan2(4, 3)
        assert!((z.re()[0] - 3.0).abs() < 1e-3 && (z.im()[0] - 4.0).abs() < 1e-3);
        let exact = polar_compose(&RTensor::from_vec(vec![5.0]), &RTensor::from_vec(vec![4f64.atan2(3.0)])).unwrap();
        assert!(exact.max_abs_diff(&c1(3.0, 4.0)) < 1e-9);

        let err = polar_compose(&RTensor::from_vec(vec![-1.0]), &RTensor::from_vec(vec![0.0]));
        assert!(matches!(err, Err(Error::InvalidMagnitude(_))));
    }

    #[test]
    fn cmul_examples() {
        assert_eq!(cmul(&c1(1.0, 2.0), &c1(3.0, 4.0)).unwrap().get(0), (-5.0, 10.0));
        let z = CTensor::from_pairs(&[(1.5, -2.0), (0.25, 7.0)]);
        assert_eq!(cmul(&z, &c1(1.0, 0.0)).unwrap(), z);
        let m = cmul(&z, &z.conj()).unwrap();
        for i in 0..2 {
            let (x, y) = z.get(i);
            assert!((m.re()[i] - (x * x + y * y)).abs() < 1e-12);
            assert_eq!(m.im()[i], 0.0);
        }
    }

    #[test]
    fn cmul_broadcasts_rows() {
        let a = CTensor::new(vec![1.0, 2.0, 3.0, 4.0], vec![0.0; 4], [2, 2]).unwrap();
        let b = CTensor::new(vec![0.0, 0.0], vec![1.0, 2.0], [2]).unwrap();
        let p = cmul(&a, &b).unwrap();
        assert_eq!(p.shape(), &Shape::new([2, 2]));
        assert_eq!(p.im(), &[1.0, 4.0, 3.0, 8.0]);
        let bad = CTensor::zeros([3]);
        assert!(cmul(&a, &bad).is_err());
    }

    #[test]
    fn matmul_oracle_examples() {
        let z = CTensor::from_pairs(&[(1.0, 2.0), (-3.0, 0.5), (0.0, -1.0)]);
        assert_eq!(matmul_oracle(&CTensor::eye(3), &z).unwrap(), z);

        let w = CTensor::new(vec![0.0], vec![1.0], [1, 1]).unwrap();
        assert_eq!(matmul_oracle(&w, &c1(1.0, 0.0)).unwrap().get(0), (0.0, 1.0));

        assert!(matmul_oracle(&CTensor::eye(2), &z).is_err());
    }

    #[test]
    fn matmul_oracle_matches_schoolbook() {
        // fixed pseudo-random 2×2 draw; schoolbook arithmetic on (a+bi)(c+di)
        let w = [(0.3, -1.2), (2.1, 0.7), (-0.4, 0.9), (1.6, -2.2)];
        let z = [(0.8, 0.1), (-1.3, 2.4)];
        let wt = CTensor::new(
            w.iter().map(|p| p.0).collect(),
            w.iter().map(|p| p.1).collect(),
            [2, 2],
        )
        .unwrap();
        let got = matmul_oracle(&wt, &CTensor::from_pairs(&z)).unwrap();
        for i in 0..2 {
            let (mut sr, mut si) = (0.0, 0.0);
            for j in 0..2 {
                let (a, b) = w[i * 2 + j];
                let (c, d) = z[j];
                sr += a * c - b * d;
                si += a * d + b * c;
            }
            assert!((got.re()[i] - sr).abs() <= 1e-12);
            assert!((got.im()[i] - si).abs() <= 1e-12);
        }
    }

    fn ctensor(n: usize) -> impl Strategy<Value = CTensor> {
        (
            prop::collection::vec(-10.0f64..10.0, n),
            prop::collection::vec(-10.0f64..10.0, n),
        )
            .prop_map(move |(re, im)| CTensor::new(re, im, [n]).unwrap())
    }

    proptest! {
        #[test]
        fn polar_round_trip(z in ctensor(16)) {
            let (r, t) = polar_decompose(&z);
            let back = polar_compose(&r, &t).unwrap();
            for i in 0..16 {
                let (x, y) = z.get(i);
                let (u, v) = back.get(i);
                let scale = x.hypot(y).max(1e-300);
                prop_assert!(((x - u).hypot(y - v)) / scale <= 1e-12 || x.hypot(y) == 0.0);
                prop_assert!(t.data()[i] > -PI && t.data()[i] <= PI);
                prop_assert!(r.data()[i] >= 0.0);
            }
        }

        #[test]
        fn conj_is_involution(z in ctensor(8)) {
            prop_assert_eq!(z.conj().conj(), z);
        }

        #[test]
        fn cmul_commutative_associative_and_multiplicative(a in ctensor(8), b in ctensor(8), c in ctensor(8)) {
            let ab = cmul(&a, &b).unwrap();
            prop_assert!(ab.max_abs_diff(&cmul(&b, &a).unwrap()) <= 1e-12);
            let l = cmul(&ab, &c).unwrap();
            let r = cmul(&a, &cmul(&b, &c).unwrap()).unwrap();
            // entries up to 1e3 in magnitude; compare relative to that scale
            let scale = l.abs().data().iter().cloned().fold(1.0, f64::max);
            prop_assert!(l.max_abs_diff(&r) <= 1e-12 * scale);
            let (ma, mb, mab) = (a.abs(), b.abs(), ab.abs());
            for i in 0..8 {
                prop_assert!((mab.data()[i] - ma.data()[i] * mb.data()[i]).abs() <= 1e-10);
            }
        }
    }
}
