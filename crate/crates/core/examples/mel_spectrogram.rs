//! Log-mel spectrogram of a two-second decaying tone.

use sustain_pedal::dsp::{melspectrogram, DspConfig, Signal, PIPELINE_SAMPLE_RATE};

fn main() -> sustain_pedal::Result<()> {
    let sr = PIPELINE_SAMPLE_RATE;
    let samples = (0..2 * sr as usize)
        .map(|i| {
            let t = i as f64 / sr as f64;
            (-3.0 * t).exp() * (2.0 * std::f64::consts::PI * 440.0 * t).sin()
        })
        .collect();
    let mel = melspectrogram(&Signal::new(samples, sr)?, &DspConfig::default())?;
    let (bands, frames) = mel.shape();
    println!("{bands} mel bands x {frames} frames");

    // loudest band per half second
    for f in (0..frames).step_by(50) {
        let (band, db) = (0..bands)
            .map(|b| (b, mel.values.get(b, f)))
            .fold((0, f64::MIN), |a, b| if b.1 > a.1 { b } else { a });
        println!("frame {f:3}: band {band:3} at {db:6.1} dB");
    }
    Ok(())
}
