//! WAV (PCM16 mono) and spectrogram CSV files.

use std::io::{Read, Write};
use std::path::Path;

use crate::ctensor::{CTensor, RTensor, Shape};
use crate::error::{Error, Result};

/// Samples scaled to `[-1, 1)` and the sample rate.
pub fn read_wav(path: impl AsRef<Path>) -> Result<(RTensor, u32)> {
    let reader = hound::WavReader::open(path)?;
    let spec = reader.spec();
    if spec.channels != 1 || spec.bits_per_sample != 16 || spec.sample_format != hound::SampleFormat::Int {
        return Err(Error::UnsupportedAudio(format!(
            "expected PCM 16-bit mono, got {} channel(s), {} bits, {:?}",
            spec.channels, spec.bits_per_sample, spec.sample_format
        )));
    }
    let data = reader
        .into_samples::<i16>()
        .map(|s| s.map(|v| f64::from(v) / 32768.0))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let n = data.len();
    Ok((RTensor::from_raw(data, Shape::new([n])), spec.sample_rate))
}

/// Writes PCM16 mono with the same 1/32768 scale as [`read_wav`], clipping
/// to the i16 range.
pub fn write_wav(path: impl AsRef<Path>, samples: &[f64], sample_rate: u32) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut w = hound::WavWriter::create(path, spec)?;
    for &s in samples {
        if !s.is_finite() {
            return Err(Error::NonFinite("write_wav"));
        }
        w.write_sample((s * 32768.0).round().clamp(-32768.0, 32767.0) as i16)?;
    }
    w.finalize()?;
    Ok(())
}

/// One row per frame: `frame, bin_0, …, bin_{K-1}` holding `|X|`.
pub fn write_magnitude_csv<W: Write>(spec: &CTensor, w: W) -> Result<()> {
    if spec.shape().ndim() != 2 {
        return Err(Error::InvalidShape {
            op: "write_magnitude_csv",
            reason: format!("expected [frames, bins], got {}", spec.shape()),
        });
    }
    let (frames, bins) = (spec.shape().dim(0), spec.shape().dim(1));
    let mag = spec.abs();
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["frame".to_string()];
    header.extend((0..bins).map(|k| format!("bin_{k}")));
    out.write_record(&header)?;
    for f in 0..frames {
        let mut row = vec![f.to_string()];
        // shortest representation that parses back to the same f64
        row.extend(mag.data()[f * bins..(f + 1) * bins].iter().map(|v| format!("{v:?}")));
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// Inverse of [`write_magnitude_csv`]; returns `[frames, bins]`.
pub fn read_magnitude_csv<R: Read>(r: R) -> Result<RTensor> {
    let mut rdr = csv::Reader::from_reader(r);
    let bins = rdr.headers()?.len().saturating_sub(1);
    let mut data = Vec::new();
    let mut frames = 0;
    for rec in rdr.records() {
        let rec = rec?;
        for field in rec.iter().skip(1) {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| Error::Format(format!("row {frames}: '{field}' is not a number")))?;
            data.push(v);
        }
        frames += 1;
    }
    RTensor::new(data, [frames, bins])
}
