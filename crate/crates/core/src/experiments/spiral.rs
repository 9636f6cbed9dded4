//! Archimedean spiral in the complex plane, used as a toy GAN target.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::ctensor::{CTensor, Shape};
use crate::error::{Error, Result};

/// `z = (a + b·t)·e^{it} + σ·(n_r + i·n_i)` with `t ~ U[0, 2π·turns]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpiralConfig {
    pub n_samples: usize,
    pub turns: f64,
    /// Radius at `t = 0`.
    pub a: f64,
    /// Radial growth per radian.
    pub b: f64,
    pub sigma: f64,
    pub seed: u64,
}

impl Default for SpiralConfig {
    fn default() -> Self {
        let turns = 2.0;
        let (a, r_max) = (0.2, 1.0);
        SpiralConfig {
            n_samples: 10_000,
            turns,
            a,
            b: (r_max - a) / (2.0 * PI * turns),
            sigma: 0.05 * r_max,
            seed: 0,
        }
    }
}

impl SpiralConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 1000 {
            return Err(Error::Config(format!("spiral needs n_samples >= 1000, got {}", self.n_samples)));
        }
        if !(self.sigma >= 0.0) || !(self.turns > 0.0) || !self.a.is_finite() || !self.b.is_finite() {
            return Err(Error::Config(format!("invalid spiral parameters {self:?}")));
        }
        Ok(())
    }

    pub fn max_radius(&self) -> f64 {
        self.a + self.b * 2.0 * PI * self.turns
    }

    /// Noiseless point at curve parameter `t`.
    pub fn point(&self, t: f64) -> (f64, f64) {
        let r = self.a + self.b * t;
        (r * t.cos(), r * t.sin())
    }
}

pub fn sample_target(cfg: &SpiralConfig) -> Result<CTensor> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = Normal::new(0.0, 1.0).expect("unit normal");
    let t_max = 2.0 * PI * cfg.turns;
    let (mut re, mut im) = (Vec::with_capacity(cfg.n_samples), Vec::with_capacity(cfg.n_samples));
    for _ in 0..cfg.n_samples {
        let t = rng.random_range(0.0..=t_max);
        let (x, y) = cfg.point(t);
        re.push(x + cfg.sigma * noise.sample(&mut rng));
        im.push(y + cfg.sigma * noise.sample(&mut rng));
    }
    Ok(CTensor::from_raw(re, im, Shape::new([cfg.n_samples])))
}
