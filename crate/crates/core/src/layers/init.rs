use rand::Rng;

use crate::ctensor::{CTensor, RTensor, Shape};

/// Glorot-uniform limit `sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_limit(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out).max(1) as f64).sqrt()
}

pub fn glorot_real<R: Rng + ?Sized>(rng: &mut R, shape: impl Into<Shape>, fan_in: usize, fan_out: usize) -> RTensor {
    let shape = shape.into();
    let lim = glorot_limit(fan_in, fan_out);
    let data = (0..shape.numel()).map(|_| rng.random_range(-lim..=lim)).collect();
    RTensor::from_raw(data, shape)
}

/// Independent Glorot-uniform planes, each scaled by 1/√2 so that `E|w|²`
/// equals the real Glorot variance.
pub fn glorot_complex<R: Rng + ?Sized>(rng: &mut R, shape: impl Into<Shape>, fan_in: usize, fan_out: usize) -> CTensor {
    let shape = shape.into();
    let lim = glorot_limit(fan_in, fan_out) * std::f64::consts::FRAC_1_SQRT_2;
    let n = shape.numel();
    let re = (0..n).map(|_| rng.random_range(-lim..=lim)).collect();
    let im = (0..n).map(|_| rng.random_range(-lim..=lim)).collect();
    CTensor::from_raw(re, im, shape)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn complex_init_matches_real_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (fi, fo) = (64, 32);
        let w = glorot_complex(&mut rng, [200, 100], fi, fo);
        let e2: f64 = w.re().iter().chain(w.im()).map(|v| v * v).sum::<f64>() / w.len() as f64;
        let real_var = 2.0 / (fi + fo) as f64;
        assert!((e2 / real_var - 1.0).abs() < 0.02, "{e2} vs {real_var}");
    }
}
