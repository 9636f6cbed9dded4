//! Parameter updates. A complex parameter is updated as the real pair
//! `(x, y) ← (x − η·∂L/∂x, y − η·∂L/∂y)`, i.e. descent along the conjugate
//! Wirtinger gradient with its ½ absorbed into `η`.

use std::collections::HashMap;

use crate::autograd::params::{ParamId, ParamStore};
use crate::error::Result;

pub trait Optimizer {
    /// Updates `ids` in place using their stored gradients.
    fn step(&mut self, store: &mut ParamStore, ids: &[ParamId]) -> Result<()>;
}

#[derive(Clone, Debug)]
pub struct Sgd {
    pub lr: f64,
}

impl Sgd {
    pub fn new(lr: f64) -> Self {
        Sgd { lr }
    }
}

impl Optimizer for Sgd {
    fn step(&mut self, store: &mut ParamStore, ids: &[ParamId]) -> Result<()> {
        let lr = self.lr;
        for &id in ids {
            store.update_with(id, |_, v, g| {
                for (x, d) in v.iter_mut().zip(g) {
                    *x -= lr * d;
                }
            })?;
        }
        Ok(())
    }
}

/// Adam over the real pair of each complex parameter, with one shared step
/// counter.
#[derive(Clone, Debug)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    // (first moment, second moment) per parameter and plane
    state: HashMap<(ParamId, usize), (Vec<f64>, Vec<f64>)>,
}

impl Adam {
    pub fn new(lr: f64, betas: (f64, f64)) -> Self {
        Adam {
            lr,
            beta1: betas.0,
            beta2: betas.1,
            eps: 1e-8,
            t: 0,
            state: HashMap::new(),
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.t
    }
}

impl Optimizer for Adam {
    fn step(&mut self, store: &mut ParamStore, ids: &[ParamId]) -> Result<()> {
        self.t += 1;
        let (b1, b2, eps, lr) = (self.beta1, self.beta2, self.eps, self.lr);
        let bc1 = 1.0 - b1.powi(self.t as i32);
        let bc2 = 1.0 - b2.powi(self.t as i32);
        for &id in ids {
            let state = &mut self.state;
            store.update_with(id, |plane, v, g| {
                let (m, s) = state
                    .entry((id, plane))
                    .or_insert_with(|| (vec![0.0; v.len()], vec![0.0; v.len()]));
                for i in 0..v.len() {
                    m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                    s[i] = b2 * s[i] + (1.0 - b2) * g[i] * g[i];
                    let mh = m[i] / bc1;
                    let sh = s[i] / bc2;
                    v[i] -= lr * mh / (sh.sqrt() + eps);
                }
            })?;
        }
        Ok(())
    }
}
