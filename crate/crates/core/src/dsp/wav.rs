use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use super::{Signal, PIPELINE_SAMPLE_RATE};
use crate::error::{Error, Result};

/// Reads a PCM (16/24-bit) or 32-bit float WAV file, downmixes to mono by
/// channel averaging and resamples to 44.1 kHz.
pub fn read_wav(path: impl AsRef<Path>) -> Result<Signal> {
    let mut reader = WavReader::open(path)?;
    let spec = reader.spec();
    let channels = spec.channels.max(1) as usize;
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()?,
        (SampleFormat::Int, bits @ (8 | 16 | 24 | 32)) => {
            let scale = (1i64 << (bits - 1)) as f64;
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| v as f64 / scale))
                .collect::<std::result::Result<_, _>>()?
        }
        (fmt, bits) => {
            return Err(Error::invalid(format!(
                "unsupported WAV sample format {fmt:?} at {bits} bits"
            )))
        }
    };
    let mono: Vec<f64> = interleaved
        .chunks(channels)
        .map(|frame| frame.iter().sum::<f64>() / frame.len() as f64)
        .collect();
    let signal = Signal::new(mono, spec.sample_rate)?;
    Ok(signal.resample_linear(PIPELINE_SAMPLE_RATE))
}

/// Writes a mono 16-bit PCM WAV file; samples are clipped to [-1, 1].
pub fn write_wav(path: impl AsRef<Path>, signal: &Signal) -> Result<()> {
    let spec = WavSpec {
        channels: 1,
        sample_rate: signal.sample_rate,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let mut writer = WavWriter::create(path, spec)?;
    for &s in &signal.samples {
        writer.write_sample((s.clamp(-1.0, 1.0) * 32767.0).round() as i16)?;
    }
    writer.finalize()?;
    Ok(())
}
