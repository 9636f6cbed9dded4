use std::collections::{BTreeMap, HashMap};

use crate::autograd::params::{ParamId, ParamKind, ParamStore};
use crate::ctensor::{CTensor, RTensor, Shape};
use crate::error::{Error, Result};

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(pub(crate) usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Forward value held by a node.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Real(RTensor),
    Complex(CTensor),
}

impl Value {
    pub fn shape(&self) -> &Shape {
        match self {
            Value::Real(t) => t.shape(),
            Value::Complex(t) => t.shape(),
        }
    }

    pub fn numel(&self) -> usize {
        self.shape().numel()
    }

    pub fn is_complex(&self) -> bool {
        matches!(self, Value::Complex(_))
    }

    pub fn as_real(&self, op: &'static str) -> Result<&RTensor> {
        match self {
            Value::Real(t) => Ok(t),
            Value::Complex(_) => Err(Error::ValueKind { op, expected: "real" }),
        }
    }

    pub fn as_complex(&self, op: &'static str) -> Result<&CTensor> {
        match self {
            Value::Complex(t) => Ok(t),
            Value::Real(_) => Err(Error::ValueKind {
                op,
                expected: "complex",
            }),
        }
    }

    /// Real plane (or the data of a real tensor).
    pub(crate) fn re(&self) -> &[f64] {
        match self {
            Value::Real(t) => t.data(),
            Value::Complex(t) => t.re(),
        }
    }

    /// Imaginary plane, `None` for real values.
    pub(crate) fn im(&self) -> Option<&[f64]> {
        match self {
            Value::Real(_) => None,
            Value::Complex(t) => Some(t.im()),
        }
    }

    pub(crate) fn from_planes(re: Vec<f64>, im: Option<Vec<f64>>, shape: Shape) -> Value {
        match im {
            Some(im) => Value::Complex(CTensor::from_raw(re, im, shape)),
            None => Value::Real(RTensor::from_raw(re, shape)),
        }
    }
}

impl From<RTensor> for Value {
    fn from(t: RTensor) -> Self {
        Value::Real(t)
    }
}

impl From<CTensor> for Value {
    fn from(t: CTensor) -> Self {
        Value::Complex(t)
    }
}

/// Gradient of a real loss with respect to a complex tensor, stored as the
/// real pair `(∂L/∂x, ∂L/∂y)`. The conjugate Wirtinger derivative is
/// `½(g_r + i·g_i)`; the ½ is folded into the learning rate.
#[derive(Clone, Debug, PartialEq)]
pub struct GradPair {
    pub g_r: RTensor,
    pub g_i: RTensor,
}

impl GradPair {
    pub fn zeros(shape: &Shape) -> Self {
        GradPair {
            g_r: RTensor::zeros(shape.clone()),
            g_i: RTensor::zeros(shape.clone()),
        }
    }

    pub fn shape(&self) -> &Shape {
        self.g_r.shape()
    }

    pub fn max_abs_diff(&self, other: &GradPair) -> f64 {
        self.g_r.max_abs_diff(&other.g_r).max(self.g_i.max_abs_diff(&other.g_i))
    }

    /// `½(g_r + i·g_i)`.
    pub fn conjugate_wirtinger(&self) -> CTensor {
        CTensor::from_raw(
            self.g_r.data().iter().map(|v| 0.5 * v).collect(),
            self.g_i.data().iter().map(|v| 0.5 * v).collect(),
            self.g_r.shape().clone(),
        )
    }
}

/// Raw gradient buffer flowing through the backward sweep. `im` is present
/// iff the corresponding value is complex.
#[derive(Clone, Debug)]
pub(crate) struct Grad {
    pub re: Vec<f64>,
    pub im: Option<Vec<f64>>,
}

impl Grad {
    pub fn real(re: Vec<f64>) -> Self {
        Grad { re, im: None }
    }

    pub fn complex(re: Vec<f64>, im: Vec<f64>) -> Self {
        Grad { re, im: Some(im) }
    }

    /// Imaginary plane; zeros when the gradient is real.
    pub fn im_or_zero(&self) -> std::borrow::Cow<'_, [f64]> {
        match &self.im {
            Some(im) => std::borrow::Cow::Borrowed(im),
            None => std::borrow::Cow::Owned(vec![0.0; self.re.len()]),
        }
    }

    fn accumulate(&mut self, other: Grad) {
        for (a, b) in self.re.iter_mut().zip(&other.re) {
            *a += b;
        }
        match (&mut self.im, other.im) {
            (Some(a), Some(b)) => {
                for (x, y) in a.iter_mut().zip(&b) {
                    *x += y;
                }
            }
            (None, Some(b)) => self.im = Some(b),
            _ => {}
        }
    }
}

/// Vector–Jacobian product of one recorded operation.
pub(crate) trait Backward {
    /// Returns one gradient per input; `needs[k]` is false for inputs that
    /// do not lead to anything differentiable, which lets ops skip work.
    fn backward(
        &self,
        inputs: &[&Value],
        output: &Value,
        grad: &Grad,
        needs: &[bool],
    ) -> Result<Vec<Option<Grad>>>;
}

struct Node {
    kind: &'static str,
    inputs: Vec<Var>,
    value: Value,
    requires_grad: bool,
    backward: Option<Box<dyn Backward>>,
}

/// Define-by-run recording of one forward pass.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
    param_leaves: HashMap<ParamId, Var>,
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    /// Number of recorded nodes (leaves included).
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn clear(&mut self) {
        self.nodes.clear();
        self.param_leaves.clear();
    }

    /// Node counts grouped by operation name.
    pub fn op_histogram(&self) -> BTreeMap<&'static str, usize> {
        let mut h = BTreeMap::new();
        for n in &self.nodes {
            *h.entry(n.kind).or_insert(0) += 1;
        }
        h
    }

    pub fn value(&self, v: Var) -> &Value {
        &self.nodes[v.0].value
    }

    pub fn real(&self, v: Var) -> Result<&RTensor> {
        self.value(v).as_real("Tape::real")
    }

    pub fn complex(&self, v: Var) -> Result<&CTensor> {
        self.value(v).as_complex("Tape::complex")
    }

    /// Scalar value of a real (or real-valued complex) scalar node.
    pub fn scalar(&self, v: Var) -> Result<f64> {
        let val = self.value(v);
        if val.numel() != 1 {
            return Err(Error::InvalidLoss(format!("shape {} is not a scalar", val.shape())));
        }
        Ok(val.re()[0])
    }

    /// Differentiable leaf (e.g. a network input whose gradient is wanted).
    pub fn input(&mut self, value: impl Into<Value>) -> Var {
        self.push_leaf("input", value.into(), true)
    }

    /// Non-differentiable leaf.
    pub fn constant(&mut self, value: impl Into<Value>) -> Var {
        self.push_leaf("constant", value.into(), false)
    }

    /// Leaf bound to a parameter. Repeated calls within one pass return the
    /// same node.
    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Var {
        if let Some(&v) = self.param_leaves.get(&id) {
            return v;
        }
        let p = store.get(id);
        let value = match p.kind() {
            ParamKind::Complex => Value::Complex(p.value().clone()),
            ParamKind::Real => Value::Real(p.value().real_part()),
        };
        let v = self.push_leaf("param", value, true);
        self.param_leaves.insert(id, v);
        v
    }

    fn push_leaf(&mut self, kind: &'static str, value: Value, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            kind,
            inputs: Vec::new(),
            value,
            requires_grad,
            backward: None,
        });
        Var(self.nodes.len() - 1)
    }

    pub(crate) fn record(
        &mut self,
        kind: &'static str,
        inputs: &[Var],
        value: Value,
        backward: Box<dyn Backward>,
    ) -> Var {
        let requires_grad = inputs.iter().any(|v| self.nodes[v.0].requires_grad);
        self.nodes.push(Node {
            kind,
            inputs: inputs.to_vec(),
            value,
            requires_grad,
            backward: Some(backward),
        });
        Var(self.nodes.len() - 1)
    }

    /// Reverse sweep from a real scalar `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let lv = self.value(loss);
        if lv.numel() != 1 {
            return Err(Error::InvalidLoss(format!("shape {} is not a scalar", lv.shape())));
        }
        if let Some(im) = lv.im() {
            if im[0].abs() > 1e-12 {
                return Err(Error::InvalidLoss(format!(
                    "imaginary part {} exceeds 1e-12",
                    im[0]
                )));
            }
        }
        let mut grads: Vec<Option<Grad>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Grad {
            re: vec![1.0],
            im: lv.is_complex().then(|| vec![0.0]),
        });
        for i in (0..=loss.0).rev() {
            let node = &self.nodes[i];
            let Some(bw) = &node.backward else { continue };
            if !node.requires_grad {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            let inputs: Vec<&Value> = node.inputs.iter().map(|v| &self.nodes[v.0].value).collect();
            let needs: Vec<bool> = node
                .inputs
                .iter()
                .map(|v| self.nodes[v.0].requires_grad)
                .collect();
            let input_grads = bw.backward(&inputs, &node.value, &g, &needs)?;
            grads[i] = Some(g);
            for ((v, ig), need) in node.inputs.iter().zip(input_grads).zip(&needs) {
                let (Some(ig), true) = (ig, *need) else { continue };
                match &mut grads[v.0] {
                    Some(acc) => acc.accumulate(ig),
                    slot @ None => *slot = Some(ig),
                }
            }
        }
        Ok(Gradients {
            shapes: self.nodes.iter().map(|n| n.value.shape().clone()).collect(),
            grads,
        })
    }

    /// Runs [`Tape::backward`] and writes a gradient into every parameter of
    /// `store`; parameters not reached from `loss` receive zeros.
    pub fn backward_into(&self, loss: Var, store: &mut ParamStore) -> Result<Gradients> {
        let grads = self.backward(loss)?;
        for id in store.ids() {
            let shape = store.get(id).value().shape().clone();
            let pair = self
                .param_leaves
                .get(&id)
                .and_then(|&v| grads.pair(v))
                .unwrap_or_else(|| GradPair::zeros(&shape));
            store.set_grad(id, pair)?;
        }
        Ok(grads)
    }
}

/// Per-node gradients from one backward sweep.
pub struct Gradients {
    grads: Vec<Option<Grad>>,
    shapes: Vec<Shape>,
}

impl Gradients {
    /// `(∂L/∂x, ∂L/∂y)` for node `v`; the imaginary half is zero for real
    /// nodes. `None` when `v` does not influence the loss.
    pub fn pair(&self, v: Var) -> Option<GradPair> {
        let g = self.grads.get(v.0)?.as_ref()?;
        let shape = self.shapes[v.0].clone();
        Some(GradPair {
            g_r: RTensor::from_raw(g.re.clone(), shape.clone()),
            g_i: RTensor::from_raw(g.im_or_zero().into_owned(), shape),
        })
    }

    pub fn real(&self, v: Var) -> Option<RTensor> {
        let g = self.grads.get(v.0)?.as_ref()?;
        Some(RTensor::from_raw(g.re.clone(), self.shapes[v.0].clone()))
    }
}
