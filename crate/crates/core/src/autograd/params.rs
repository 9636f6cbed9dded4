use crate::autograd::tape::GradPair;
use crate::ctensor::{CTensor, RTensor};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Real parameters keep an all-zero imaginary plane and enter the tape as
/// real values.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamKind {
    Complex,
    Real,
}

#[derive(Clone, Debug)]
pub struct Parameter {
    name: String,
    kind: ParamKind,
    value: CTensor,
    grad: Option<GradPair>,
}

impl Parameter {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> ParamKind {
        self.kind
    }

    pub fn value(&self) -> &CTensor {
        &self.value
    }

    pub fn grad(&self) -> Option<&GradPair> {
        self.grad.as_ref()
    }

    /// Number of stored real scalars.
    pub fn scalar_count(&self) -> usize {
        match self.kind {
            ParamKind::Complex => 2 * self.value.len(),
            ParamKind::Real => self.value.len(),
        }
    }
}

/// Owns every trainable tensor; layers refer to entries by [`ParamId`].
#[derive(Clone, Debug, Default)]
pub struct ParamStore {
    params: Vec<Parameter>,
}

impl ParamStore {
    pub fn new() -> Self {
        ParamStore::default()
    }

    pub fn add_complex(&mut self, name: impl Into<String>, value: CTensor) -> ParamId {
        self.push(name.into(), ParamKind::Complex, value)
    }

    pub fn add_real(&mut self, name: impl Into<String>, value: RTensor) -> ParamId {
        self.push(name.into(), ParamKind::Real, CTensor::from_real(&value))
    }

    fn push(&mut self, name: String, kind: ParamKind, value: CTensor) -> ParamId {
        self.params.push(Parameter {
            name,
            kind,
            value,
            grad: None,
        });
        ParamId(self.params.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn ids(&self) -> Vec<ParamId> {
        (0..self.params.len()).map(ParamId).collect()
    }

    /// Ids created after `start` (exclusive range end is the current size).
    pub fn ids_since(&self, start: usize) -> Vec<ParamId> {
        (start..self.params.len()).map(ParamId).collect()
    }

    pub fn get(&self, id: ParamId) -> &Parameter {
        &self.params[id.0]
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Parameter)> {
        self.params.iter().enumerate().map(|(i, p)| (ParamId(i), p))
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.params.iter().position(|p| p.name == name).map(ParamId)
    }

    pub fn value(&self, id: ParamId) -> &CTensor {
        &self.params[id.0].value
    }

    pub fn grad(&self, id: ParamId) -> Option<&GradPair> {
        self.params[id.0].grad.as_ref()
    }

    pub fn set_value(&mut self, id: ParamId, value: CTensor) -> Result<()> {
        let p = &mut self.params[id.0];
        if value.shape() != p.value.shape() {
            return Err(Error::ShapeMismatch {
                op: "ParamStore::set_value",
                lhs: p.value.shape().clone(),
                rhs: value.shape().clone(),
            });
        }
        p.value = match p.kind {
            ParamKind::Complex => value,
            ParamKind::Real => CTensor::from_real(&value.real_part()),
        };
        Ok(())
    }

    pub fn set_grad(&mut self, id: ParamId, grad: GradPair) -> Result<()> {
        let p = &mut self.params[id.0];
        if grad.shape() != p.value.shape() {
            return Err(Error::ShapeMismatch {
                op: "ParamStore::set_grad",
                lhs: p.value.shape().clone(),
                rhs: grad.shape().clone(),
            });
        }
        p.grad = Some(grad);
        Ok(())
    }

    pub fn zero_grad(&mut self) {
        for p in &mut self.params {
            p.grad = None;
        }
    }

    /// One real (`imag = false`) or imaginary entry.
    pub fn entry(&self, id: ParamId, index: usize, imag: bool) -> f64 {
        let v = &self.params[id.0].value;
        if imag {
            v.im()[index]
        } else {
            v.re()[index]
        }
    }

    pub fn set_entry(&mut self, id: ParamId, index: usize, imag: bool, value: f64) {
        let (re, im) = self.params[id.0].value.planes_mut();
        if imag {
            im[index] = value;
        } else {
            re[index] = value;
        }
    }

    /// Applies `update(value_plane, grad_plane)` to each plane of parameter
    /// `id`; the imaginary plane of a real parameter is left untouched.
    pub(crate) fn update_with(
        &mut self,
        id: ParamId,
        mut update: impl FnMut(usize, &mut [f64], &[f64]),
    ) -> Result<()> {
        let p = &mut self.params[id.0];
        let Some(g) = p.grad.take() else {
            return Err(Error::MissingGradient(p.name.clone()));
        };
        let kind = p.kind;
        let (re, im) = p.value.planes_mut();
        update(0, re, g.g_r.data());
        if kind == ParamKind::Complex {
            update(1, im, g.g_i.data());
        }
        p.grad = Some(g);
        Ok(())
    }

    /// Total real scalars stored across `ids`.
    pub fn scalar_count(&self, ids: &[ParamId]) -> usize {
        ids.iter().map(|&id| self.get(id).scalar_count()).sum()
    }
}
