use crate::error::{Error, Result};
use crate::signal::stft::{stft, StftConfig};

/// Magnitude floor inside the logarithm.
pub const MAG_FLOOR: f64 = 1e-7;

/// `(n_fft, hop, win_length)` triples `(512, 128, 512)`, `(1024, 256, 1024)`,
/// `(2048, 512, 2048)`.
pub fn default_resolutions() -> Vec<StftConfig> {
    [(512, 128, 512), (1024, 256, 1024), (2048, 512, 2048)]
        .into_iter()
        .map(|(n, h, w)| StftConfig::new(n, h, w).expect("valid built-in resolution"))
        .collect()
}

/// The Auraloss defaults: `(1024, 120, 600)`, `(2048, 240, 1200)`, `(512, 50, 240)`.
pub fn auraloss_resolutions() -> Vec<StftConfig> {
    [(1024, 120, 600), (2048, 240, 1200), (512, 50, 240)]
        .into_iter()
        .map(|(n, h, w)| StftConfig::new(n, h, w).expect("valid built-in resolution"))
        .collect()
}

/// Spectral convergence plus mean absolute log-magnitude difference,
/// averaged over resolutions. `reference` normalizes the convergence term.
pub fn mr_stft_error(reference: &[f64], estimate: &[f64], resolutions: &[StftConfig]) -> Result<f64> {
    if reference.len() != estimate.len() {
        return Err(Error::LengthMismatch {
            len: estimate.len(),
            shape: [reference.len()].into(),
        });
    }
    if resolutions.is_empty() {
        return Err(Error::Config("no STFT resolutions given".into()));
    }
    let mut total = 0.0;
    for cfg in resolutions {
        let a = stft(cfg, reference)?.abs();
        let b = stft(cfg, estimate)?.abs();
        let (mut diff2, mut ref2, mut log_l1) = (0.0, 0.0, 0.0);
        for (&x, &y) in a.data().iter().zip(b.data()) {
            diff2 += (x - y) * (x - y);
            ref2 += x * x;
            log_l1 += (x.max(MAG_FLOOR).ln() - y.max(MAG_FLOOR).ln()).abs();
        }
        let sc = if diff2 == 0.0 { 0.0 } else { diff2.sqrt() / ref2.sqrt().max(MAG_FLOOR) };
        total += sc + log_l1 / a.len() as f64;
    }
    Ok(total / resolutions.len() as f64)
}
