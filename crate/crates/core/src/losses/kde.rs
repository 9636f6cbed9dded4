//! Jensen–Shannon divergence between two 1-D sample sets through Gaussian
//! kernel density estimates on a shared grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_SAMPLES: usize = 100;
pub const MIN_GRID: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Bandwidth {
    /// `σ n^{-1/5}`
    Scott,
    /// `0.9 min(σ, IQR/1.34) n^{-1/5}`
    Silverman,
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KdeConfig {
    pub bandwidth: Bandwidth,
    pub grid: usize,
    /// Grid spans `[min − pad·h, max + pad·h]` of the pooled samples.
    pub pad: f64,
}

impl Default for KdeConfig {
    fn default() -> Self {
        KdeConfig { bandwidth: Bandwidth::Scott, grid: 512, pad: 3.0 }
    }
}

fn std_dev(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0)).sqrt()
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, frac) = (pos.floor() as usize, pos.fract());
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

fn bandwidth(rule: Bandwidth, x: &[f64]) -> Result<f64> {
    let sd = std_dev(x);
    if !(sd > 0.0) {
        return Err(Error::Degenerate("sample set has zero variance".into()));
    }
    let nf = (x.len() as f64).powf(-0.2);
    let h = match rule {
        Bandwidth::Scott => sd * nf,
        Bandwidth::Silverman => {
            let mut s = x.to_vec();
            s.sort_by(f64::total_cmp);
            let iqr = quantile(&s, 0.75) - quantile(&s, 0.25);
            let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
            0.9 * spread * nf
        }
        Bandwidth::Fixed(h) => h,
    };
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Config(format!("KDE bandwidth must be positive, got {h}")));
    }
    Ok(h)
}

/// Density at each grid point, normalized to sum to one.
fn density(x: &[f64], h: f64, grid: &[f64]) -> Vec<f64> {
    let inv = 1.0 / h;
    let mut p: Vec<f64> = grid
        .iter()
        .map(|&g| {
            x.iter()
                .map(|&v| {
                    let u = (g - v) * inv;
                    (-0.5 * u * u).exp()
                })
                .sum()
        })
        .collect();
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= s);
    p
}

fn kl_to_mid(p: &[f64], m: &[f64]) -> f64 {
    p.iter().zip(m).filter(|(a, _)| **a > 0.0).map(|(a, b)| a * (a / b).ln()).sum()
}

/// JSD in nats, in `[0, ln 2]`.
pub fn jsd_1d(a: &[f64], b: &[f64], cfg: &KdeConfig) -> Result<f64> {
    if a.len() < MIN_SAMPLES || b.len() < MIN_SAMPLES {
        return Err(Error::Config(format!(
            "jsd_1d needs at least {MIN_SAMPLES} samples per side, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if cfg.grid < MIN_GRID {
        return Err(Error::Config(format!("KDE grid must have at least {MIN_GRID} points, got {}", cfg.grid)));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("jsd_1d"));
    }
    let (ha, hb) = (bandwidth(cfg.bandwidth, a)?, bandwidth(cfg.bandwidth, b)?);
    let h = ha.max(hb);
    let lo = a.iter().chain(b).copied().fold(f64::INFINITY, f64::min) - cfg.pad * h;
    let hi = a.iter().chain(b).copied().fold(f64::NEG_INFINITY, f64::max) + cfg.pad * h;
    let step = (hi - lo) / (cfg.grid - 1) as f64;
    let grid: Vec<f64> = (0..cfg.grid).map(|i| lo + step * i as f64).collect();
    let (p, q) = rayon::join(|| density(a, ha, &grid), || density(b, hb, &grid));
    let m: Vec<f64> = p.iter().zip(&q).map(|(x, y)| 0.5 * (x + y)).collect();
    let j = 0.5 * kl_to_mid(&p, &m) + 0.5 * kl_to_mid(&q, &m);
    Ok(j.clamp(0.0, std::f64::consts::LN_2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn normal(n: usize, mu: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = Normal::new(mu, 1.0).unwrap();
        (0..n).map(|_| d.sample(&mut rng)).collect()
    }

    #[test]
    fn identical_sets_give_zero() {
        let a = normal(2000, 0.0, 1);
        assert!(jsd_1d(&a, &a, &KdeConfig::default()).unwrap().abs() < 1e-12);
    }

    #[test]
    fn disjoint_normals_saturate() {
        let (a, b) = (normal(10_000, 0.0, 2), normal(10_000, 10.0, 3));
        let j = jsd_1d(&a, &b, &KdeConfig::default()).unwrap();
        assert!((j - std::f64::consts::LN_2).abs() < 0.01, "{j}");
    }

    #[test]
    fn independent_draws_are_close() {
        let (a, b) = (normal(10_000, 0.0, 4), normal(10_000, 0.0, 5));
        let j = jsd_1d(&a, &b, &KdeConfig::default()).unwrap();
        assert!(j <= 0.005, "{j}");
    }

    #[test]
    fn symmetric_and_bounded() {
        let (a, b) = (normal(500, 0.0, 6), normal(700, 1.5, 7));
        for bw in [Bandwidth::Scott, Bandwidth::Silverman, Bandwidth::Fixed(0.3)] {
            let cfg = KdeConfig { bandwidth: bw, ..Default::default() };
            let (x, y) = (jsd_1d(&a, &b, &cfg).unwrap(), jsd_1d(&b, &a, &cfg).unwrap());
            assert!((x - y).abs() < 1e-12);
            assert!(x > 0.0 && x <= std::f64::consts::LN_2);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let a = normal(200, 0.0, 8);
        let cfg = KdeConfig::default();
        assert!(jsd_1d(&a[..99], &a, &cfg).is_err());
        assert!(matches!(jsd_1d(&a, &[1.0; 200], &cfg), Err(Error::Degenerate(_))));
        assert!(jsd_1d(&a, &a, &KdeConfig { grid: 32, ..cfg }).is_err());
        assert!(jsd_1d(&a, &a, &KdeConfig { bandwidth: Bandwidth::Fixed(0.0), ..cfg }).is_err());
    }

    #[test]
    fn silverman_matches_hand_computation() {
        // 0..=99: sd = sqrt(841.666..), IQR = 49.5
        let x: Vec<f64> = (0..100).map(f64::from).collect();
        let sd = (100.0 * 101.0 / 12.0f64).sqrt();
        let want = 0.9 * sd.min(49.5 / 1.34) * 100f64.powf(-0.2);
        assert!((bandwidth(Bandwidth::Silverman, &x).unwrap() - want).abs() < 1e-12);
        assert!((bandwidth(Bandwidth::Scott, &x).unwrap() - sd * 100f64.powf(-0.2)).abs() < 1e-12);
    }
}
